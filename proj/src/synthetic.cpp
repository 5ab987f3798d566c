#include "fop/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <utility>

#include "fop/text.hpp"

namespace fop {
namespace {

// One verb per slot index, shared by every flow, so no verb repeats inside a
// dialogue's system turns (repetition would inflate its tf-idf score).
constexpr std::array<std::string_view, kSyntheticSlots> kSlotVerbs = {
    "says", "reads", "shows", "lists", "marks", "notes", "flags", "states", "prints",
};

constexpr std::array<char, 14> kOnsets = {'b', 'd', 'f', 'g', 'k', 'l', 'm',
                                          'n', 'p', 'r', 's', 't', 'v', 'z'};
constexpr std::array<char, 5> kNuclei = {'a', 'e', 'i', 'o', 'u'};
// Final vowels exclude 'e' so Porter's e-drop never fires on slot words.
constexpr std::array<char, 4> kFinals = {'a', 'i', 'o', 'u'};

struct SystemTurn {
    std::array<std::string_view, 4> openers;
    std::array<std::string_view, 4> tails;
};

struct UserTurn {
    std::array<std::string_view, 4> prefixes;
    std::array<std::string_view, 4> suffixes;
};

struct FlowDef {
    std::string_view name;
    std::array<std::string_view, 4> greetings;
    std::array<std::string_view, kSyntheticSlots> noun1;
    std::array<std::string_view, kSyntheticSlots> noun2;
    // Turn t carries slots {2t, 2t+1}, the last turn slot 8 alone.
    std::array<SystemTurn, 5> system_turns;
    // Asks ahead of system turns 1..4; the greeting precedes turn 0.
    std::array<UserTurn, 4> user_asks;
};

constexpr std::array<std::string_view, 4> kSharedLateTails = {
    "", "all set i believe", "matching your message", "good to go"};
constexpr std::array<std::string_view, 4> kSharedFarewells = {
    "thanks for everything goodbye", "cheers and bye for now", "many thanks take care",
    "grateful for the support farewell"};

const std::array<FlowDef, kSyntheticFlows>& flow_defs() {
    static const std::array<FlowDef, kSyntheticFlows> defs = {{
        {
            "product_return",
            {"hello thanks for contacting the returns desk how can i help today",
             "hi there you have reached the returns desk what can i do for you",
             "good day from the returns desk please tell me what is going on",
             "welcome to the returns desk i am glad to assist you"},
            {"model", "shade", "batch", "branch", "carrier", "ticket", "voucher", "reference",
             "case"},
            {"label", "field", "tag", "entry", "line", "strip", "slip", "row", "word"},
            {{
                {{"hi i bought a broken unit", "hello i received a faulty unit",
                  "hey my new unit stopped working", "greetings i have a damaged unit"},
                 {"can you help", "i want this fixed", "quite disappointing honestly", ""}},
                {{"of course checking the paperwork now", "sure the slip is right here",
                  "right let me look it up", "okay just a moment"},
                 {"", "hope that is correct", "there you go", "straight off the page"}},
                {{"alright more details follow", "fine both fields are visible",
                  "yes i can see them", "certainly they appear below"},
                 {"is that what you need", "", "copied from the box", "so much bookkeeping"}},
                {{"got it the receipt arrived", "received and ready",
                  "yes the papers came through", "confirmed i am holding everything"},
                 kSharedLateTails},
                {{"no problem the letter is here", "sure thing it came today",
                  "of course i kept the copy", "certainly happy to close this"},
                 kSharedFarewells},
            }},
            {{
                {{"i can help with that please read me", "sorry about the trouble could you share",
                  "let us sort this out i need", "understood we will fix it first give me"},
                 {"", "with me", "from the slip", "right away"}},
                {{"thank you that matches our records now read me",
                  "great that checks out next i need", "perfect the order is found please confirm",
                  "lovely the file is open kindly state"},
                 {"", "from the box", "for me", "one by one"}},
                {{"wonderful the return is approved please confirm",
                  "excellent i raised the request now verify",
                  "superb the case is booked just read back", "done the return stands finally check"},
                 {"from your receipt", "for the record", "when ready", ""}},
                {{"brilliant a pickup is scheduled for the file i need",
                  "great news the collection is arranged lastly read me",
                  "all set the courier is booked one last thing share",
                  "splendid everything is in place kindly confirm"},
                 {"from your letter", "please", "now", "for our records"}},
            }},
        },
        {
            "billing_issue",
            {"hello thanks for calling the billing desk how can i help today",
             "hi there you have reached the billing desk what can i do for you",
             "good day from the billing desk please tell me what is going on",
             "welcome to the billing desk i am glad to assist you"},
            {"invoice", "amount", "account", "cycle", "method", "dispute", "credit", "adjustment",
             "claim"},
            {"stamp", "panel", "badge", "ledger", "column", "notch", "chit", "lane", "term"},
            {{
                {{"hi i spotted a strange charge", "hello my bill doubled overnight",
                  "hey i found an extra charge", "greetings my statement looks wrong"},
                 {"please explain", "i did not order this", "kindly sort it out", ""}},
                {{"of course pulling the statement now", "sure the bill is in front of me",
                  "right give me a second", "okay here it comes"},
                 {"", "hope that settles it", "as written", "take your time"}},
                {{"alright the breakdown continues", "fine every block is legible",
                  "yes both sections came out", "certainly more appears here"},
                 {"is that the part you wanted", "", "copied from the printout",
                  "dense little document"}},
                {{"got it the summary arrived", "received and ready",
                  "yes the notice came through", "confirmed i am holding everything"},
                 kSharedLateTails},
                {{"no problem the memo is here", "sure thing it came today",
                  "of course i kept the copy", "certainly happy to close this"},
                 kSharedFarewells},
            }},
            {{
                {{"i can help with that please read me",
                  "sorry about the confusion could you share", "let us straighten this out i need",
                  "understood we will correct it first give me"},
                 {"", "with me", "from the bill", "right away"}},
                {{"thank you that matches our system now read me",
                  "great that checks out next i need", "perfect the entry is found please confirm",
                  "lovely the ledger is open kindly state"},
                 {"", "from the statement", "for me", "one by one"}},
                {{"wonderful the refund is approved please confirm",
                  "excellent i raised the correction now verify",
                  "superb the claim is filed just read back", "done the reversal stands finally check"},
                 {"from your summary", "for the record", "when ready", ""}},
                {{"brilliant a credit is scheduled for the file i need",
                  "great news the reversal is arranged lastly read me",
                  "all set the refund is booked one last thing share",
                  "splendid everything is in place kindly confirm"},
                 {"from your memo", "please", "now", "for our records"}},
            }},
        },
        {
            "promo_code",
            {"hello thanks for contacting the promotions desk how can i help today",
             "hi there you have reached the promotions desk what can i do for you",
             "good day from the promotions desk please tell me what is going on",
             "welcome to the promotions desk i am glad to assist you"},
            {"coupon", "discount", "campaign", "region", "channel", "expiry", "bonus", "approval",
             "promo"},
            {"sticker", "pane", "banner", "zone", "feed", "seal", "stub", "rank", "phrase"},
            {{
                {{"hi my promo code will not apply", "hello the checkout rejects my code",
                  "hey my saving never appeared", "greetings the code keeps failing"},
                 {"please have a look", "i really wanted this deal", "rather frustrating", ""}},
                {{"of course opening the offer now", "sure the email is right here",
                  "right scrolling to it", "okay found the message"},
                 {"", "hope that is usable", "exactly as sent", "over to you"}},
                {{"alright the fine print continues", "fine both lines are legible",
                  "yes i can make them out", "certainly the details follow"},
                 {"is that the right part", "", "copied from the mail", "clever marketing people"}},
                {{"got it the reward post arrived", "received and ready",
                  "yes the extra post came through", "confirmed i am holding everything"},
                 kSharedLateTails},
                {{"no problem the flyer is here", "sure thing it came today",
                  "of course i kept the copy", "certainly happy to close this"},
                 kSharedFarewells},
            }},
            {{
                {{"i can help with that please read me", "sorry about the hassle could you share",
                  "let us look closer i need", "understood we will check it first give me"},
                 {"", "with me", "from the email", "right away"}},
                {{"thank you that matches our campaign now read me",
                  "great that checks out next i need", "perfect the offer is found please confirm",
                  "lovely the promotion is open kindly state"},
                 {"", "from the email", "for me", "one by one"}},
                {{"wonderful the code is reissued please confirm",
                  "excellent i raised a fresh offer now verify",
                  "superb the deal is secured just read back", "done the override stands finally check"},
                 {"from your mail", "for the record", "when ready", ""}},
                {{"brilliant the savings are locked for the file i need",
                  "great news the offer is applied lastly read me",
                  "all set the basket is updated one last thing share",
                  "splendid everything is in place kindly confirm"},
                 {"from your flyer", "please", "now", "for our records"}},
            }},
        },
        {
            "shipping_delay",
            {"hello thanks for contacting the delivery desk how can i help today",
             "hi there you have reached the delivery desk what can i do for you",
             "good day from the delivery desk please tell me what is going on",
             "welcome to the delivery desk i am glad to assist you"},
            {"parcel", "route", "depot", "window", "courier", "manifest", "rebate", "tracking",
             "delay"},
            {"plate", "form", "chip", "gate", "wire", "stencil", "board", "grid", "sign"},
            {{
                {{"hi my order is a week late", "hello my box never showed up",
                  "hey the van skipped my street again", "greetings my shipment seems lost"},
                 {"where is it", "i need it urgently", "this keeps happening", ""}},
                {{"of course the sticker is with me", "sure reading off the package now",
                  "right it is all on the box", "okay one second"},
                 {"", "hope that locates it", "exactly as stamped", "your turn"}},
                {{"alright the small print continues", "fine both codes are crisp",
                  "yes i can make them out", "certainly the rest follows"},
                 {"is that the piece you need", "", "copied from the margin",
                  "tiny letters by the way"}},
                {{"got it the updated docket arrived", "received and ready",
                  "yes the papers came through", "confirmed i am holding everything"},
                 kSharedLateTails},
                {{"no problem the slip is here", "sure thing it came today",
                  "of course i kept the copy", "certainly happy to close this"},
                 kSharedFarewells},
            }},
            {{
                {{"i can help with that please read me", "sorry about the wait could you share",
                  "let us trace it i need", "understood we will chase it first give me"},
                 {"", "with me", "from the label", "right away"}},
                {{"thank you that matches our depot now read me",
                  "great that checks out next i need",
                  "perfect the shipment is found please confirm",
                  "lovely the route is open kindly state"},
                 {"", "from the docket", "for me", "one by one"}},
                {{"wonderful the parcel is rerouted please confirm",
                  "excellent i booked a fresh run now verify",
                  "superb the refund is granted just read back", "done the claim stands finally check"},
                 {"from your docket", "for the record", "when ready", ""}},
                {{"brilliant the driver is rescheduled for the file i need",
                  "great news the drop is arranged lastly read me",
                  "all set the van is booked one last thing share",
                  "splendid everything is in place kindly confirm"},
                 {"from your letter", "please", "now", "for our records"}},
            }},
        },
        {
            "account_access",
            {"hello thanks for contacting the security desk how can i help today",
             "hi there you have reached the security desk what can i do for you",
             "good day from the security desk please tell me what is going on",
             "welcome to the security desk i am glad to assist you"},
            {"profile", "device", "browser", "locale", "recovery", "session", "reset", "security",
             "access"},
            {"card", "socket", "token", "vault", "port", "frame", "leaf", "stack", "key"},
            {{
                {{"hi i am locked out of my login", "hello my password loops forever",
                  "hey the portal rejects me", "greetings my account went dark"},
                 {"please unlock it", "i need to get in soon", "most inconvenient", ""}},
                {{"of course the details are handy", "sure i wrote them down",
                  "right i keep them taped up", "okay one moment"},
                 {"", "hope they still work", "exactly as saved", "going from memory here"}},
                {{"alright the next pair follows", "fine both values are saved",
                  "yes i can recall them", "certainly here is the rest"},
                 {"is that the pair you need", "", "copied from my notebook", "quite the ritual"}},
                {{"got it the unlock post arrived", "received and ready",
                  "yes the letter came through", "confirmed i am holding everything"},
                 kSharedLateTails},
                {{"no problem the printout is here", "sure thing it came today",
                  "of course i kept the copy", "certainly happy to close this"},
                 kSharedFarewells},
            }},
            {{
                {{"i can help with that please read me", "sorry about the lockout could you share",
                  "let us restore it i need", "understood we will reset it first give me"},
                 {"", "with me", "from your notes", "right away"}},
                {{"thank you that matches our registry now read me",
                  "great that checks out next i need", "perfect the profile is found please confirm",
                  "lovely the record is open kindly state"},
                 {"", "from your notes", "for me", "one by one"}},
                {{"wonderful the access is restored please confirm",
                  "excellent i issued a fresh link now verify",
                  "superb the unlock is done just read back", "done the override stands finally check"},
                 {"from your inbox", "for the record", "when ready", ""}},
                {{"brilliant the account is reopened for the file i need",
                  "great news the unlock is logged lastly read me",
                  "all set the portal is live one last thing share",
                  "splendid everything is in place kindly confirm"},
                 {"from your printout", "please", "now", "for our records"}},
            }},
        },
    }};
    return defs;
}

std::string filler_word(std::size_t i) {
    std::string w;
    w += kOnsets[i % kOnsets.size()];
    w += 'u';
    w += kOnsets[(i / kOnsets.size() + 3) % kOnsets.size()];
    w += 'o';
    return w;
}

void append_tokens(std::vector<std::string>& out, std::string_view fragment) {
    for (auto& token : tokenize(fragment)) out.push_back(std::move(token));
}

void append_carrier(std::vector<std::string>& out, const FlowDef& def, std::size_t slot,
                    const std::string& value) {
    out.emplace_back("the");
    out.emplace_back(def.noun1[slot]);
    out.emplace_back(def.noun2[slot]);
    out.emplace_back(kSlotVerbs[slot]);
    out.push_back(value);
}

void append_noun_phrase(std::vector<std::string>& out, const FlowDef& def, std::size_t slot) {
    out.emplace_back("the");
    out.emplace_back(def.noun1[slot]);
    out.emplace_back(def.noun2[slot]);
}

// Filler insertion happens here, one coin per internal gap.
Utterance assemble(Speaker speaker, const std::vector<std::string>& words, Rng& rng) {
    std::vector<std::string> noisy;
    noisy.reserve(words.size() + 4);
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0 && uniform01(rng) < kSyntheticFillerProb)
            noisy.push_back(filler_word(uniform_index(rng, kSyntheticFillerWords)));
        noisy.push_back(words[i]);
    }
    return make_utterance(speaker, join_tokens(noisy));
}

Conversation make_dialogue(std::size_t index, std::size_t flow, std::size_t bundle, Rng& rng) {
    const FlowDef& def = flow_defs()[flow];

    std::array<std::string, kSyntheticSlots> values;
    for (std::size_t j = 0; j < kSyntheticSlots; ++j) {
        std::size_t v = synthetic_bundle_value(bundle, j);
        if (uniform01(rng) < kSyntheticMutationProb) v = uniform_index(rng, kSyntheticSlotValues);
        values[j] = synthetic_slot_value(flow, j, v);
    }

    Conversation conv;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%06zu", index + 1);
    conv.id = id;

    std::vector<std::string> words;
    std::size_t variant = uniform_index(rng, def.greetings.size());
    append_tokens(words, def.greetings[variant]);
    conv.utterances.push_back(assemble(Speaker::User, words, rng));

    for (std::size_t t = 0; t < def.system_turns.size(); ++t) {
        const SystemTurn& turn = def.system_turns[t];
        variant = uniform_index(rng, turn.openers.size());
        words.clear();
        append_tokens(words, turn.openers[variant]);
        std::size_t first = 2 * t;
        append_carrier(words, def, first, values[first]);
        if (t + 1 < def.system_turns.size()) {
            words.emplace_back("and");
            append_carrier(words, def, first + 1, values[first + 1]);
        }
        append_tokens(words, turn.tails[variant]);
        conv.utterances.push_back(assemble(Speaker::System, words, rng));

        if (t < def.user_asks.size()) {
            const UserTurn& ask = def.user_asks[t];
            variant = uniform_index(rng, ask.prefixes.size());
            words.clear();
            append_tokens(words, ask.prefixes[variant]);
            std::size_t next = 2 * (t + 1);
            append_noun_phrase(words, def, next);
            if (next + 1 < kSyntheticSlots) {
                words.emplace_back("and");
                append_noun_phrase(words, def, next + 1);
            }
            append_tokens(words, ask.suffixes[variant]);
            conv.utterances.push_back(assemble(Speaker::User, words, rng));
        }
    }
    return conv;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t splitmix_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void normalize(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq <= 0.0) {
        v.assign(v.size(), 0.0);
        v[0] = 1.0;
        return;
    }
    double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

std::vector<double> hashed_direction(std::string_view key, std::size_t dim) {
    std::uint64_t state = fnv1a(key);
    std::vector<double> v(dim);
    for (double& x : v)
        x = static_cast<double>(splitmix_next(state) >> 11) * 0x1.0p-52 - 1.0;
    normalize(v);
    return v;
}

// word -> (flow, slot) for slot values only.
const std::unordered_map<std::string, std::pair<std::size_t, std::size_t>>& slot_value_index() {
    static const auto index = [] {
        std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> m;
        for (std::size_t f = 0; f < kSyntheticFlows; ++f)
            for (std::size_t j = 0; j < kSyntheticSlots; ++j)
                for (std::size_t v = 0; v < kSyntheticSlotValues; ++v)
                    m.emplace(synthetic_slot_value(f, j, v), std::make_pair(f, j));
        return m;
    }();
    return index;
}

}  // namespace

Corpus generate_synthetic_corpus(std::size_t flows, std::size_t samples, Rng& rng) {
    if (flows < 1 || flows > kSyntheticFlows)
        throw std::invalid_argument("generate_synthetic_corpus: flows must be in [1, 5]");
    if (samples < 1) throw std::invalid_argument("generate_synthetic_corpus: samples must be >= 1");

    Corpus corpus;
    corpus.conversations.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        std::size_t flow = i % flows;
        std::size_t bundle = (i / flows) % kSyntheticBundles;
        corpus.conversations.push_back(make_dialogue(i, flow, bundle, rng));
    }
    rebuild_document_frequency(corpus);
    return corpus;
}

std::string synthetic_flow_name(std::size_t flow) {
    return std::string(flow_defs().at(flow).name);
}

std::string synthetic_slot_value(std::size_t flow, std::size_t slot, std::size_t value) {
    if (flow >= kSyntheticFlows || slot >= kSyntheticSlots || value >= kSyntheticSlotValues)
        throw std::out_of_range("synthetic_slot_value: index out of range");
    std::size_t n = (flow * kSyntheticSlots + slot) * kSyntheticSlotValues + value;
    std::string w;
    w += kOnsets[n % kOnsets.size()];
    w += kNuclei[(n / kOnsets.size()) % kNuclei.size()];
    w += kOnsets[(n / (kOnsets.size() * kNuclei.size())) % kOnsets.size()];
    w += kNuclei[(n * 7 + 3) % kNuclei.size()];
    w += kOnsets[(n * 11 + 5) % kOnsets.size()];
    w += kFinals[(n * 3 + 1) % kFinals.size()];
    return w;
}

std::size_t synthetic_bundle_value(std::size_t bundle, std::size_t slot) {
    if (bundle >= kSyntheticBundles || slot >= kSyntheticSlots)
        throw std::out_of_range("synthetic_bundle_value: index out of range");
    return (bundle + 5 * slot + 3) % kSyntheticSlotValues;
}

std::vector<std::string> synthetic_vocabulary() {
    std::vector<std::string> all;
    auto add = [&all](std::string_view fragment) { append_tokens(all, fragment); };
    for (const FlowDef& def : flow_defs()) {
        for (auto g : def.greetings) add(g);
        for (auto n : def.noun1) add(n);
        for (auto n : def.noun2) add(n);
        for (const SystemTurn& t : def.system_turns) {
            for (auto o : t.openers) add(o);
            for (auto x : t.tails) add(x);
        }
        for (const UserTurn& t : def.user_asks) {
            for (auto p : t.prefixes) add(p);
            for (auto s : t.suffixes) add(s);
        }
    }
    for (auto v : kSlotVerbs) add(v);
    add("the and");
    for (std::size_t f = 0; f < kSyntheticFlows; ++f)
        for (std::size_t j = 0; j < kSyntheticSlots; ++j)
            for (std::size_t v = 0; v < kSyntheticSlotValues; ++v)
                all.push_back(synthetic_slot_value(f, j, v));
    for (std::size_t i = 0; i < kSyntheticFillerWords; ++i) all.push_back(filler_word(i));

    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

EmbeddingTable synthetic_embeddings(std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("synthetic_embeddings: dim must be positive");

    EmbeddingTable table;
    table.dim = dim;
    const auto& slots = slot_value_index();
    for (const std::string& word : synthetic_vocabulary()) {
        auto it = slots.find(word);
        if (it == slots.end()) {
            table.entries.emplace(word, hashed_direction("word:" + word, dim));
            continue;
        }
        std::string group_key = "slot-group:" + std::to_string(it->second.first) + ":" +
                                std::to_string(it->second.second);
        std::vector<double> v = hashed_direction(group_key, dim);
        std::vector<double> noise = hashed_direction("slot-word:" + word, dim);
        for (std::size_t d = 0; d < dim; ++d) v[d] += noise[d];
        normalize(v);
        table.entries.emplace(word, std::move(v));
    }
    return table;
}

}  // namespace fop

#include "fop/stemmer.hpp"

#include <algorithm>
#include <cctype>

namespace fop {

namespace {

// Working state for one stemming pass. `b` always holds the current word;
// `j` marks the end of the stem after a successful ends() probe.
struct Porter {
    std::string b;
    int j = 0;

    explicit Porter(std::string word) : b(std::move(word)) {}

    int last() const { return static_cast<int>(b.size()) - 1; }

    bool cons(int i) const {
        switch (b[static_cast<size_t>(i)]) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !cons(i - 1);
            default:
                return true;
        }
    }

    // Number of vowel-consonant sequences in b[0..j].
    int m() const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j; ++i) {
            if (!cons(i)) return true;
        }
        return false;
    }

    bool double_cons(int i) const {
        if (i < 1) return false;
        if (b[static_cast<size_t>(i)] != b[static_cast<size_t>(i - 1)]) return false;
        return cons(i);
    }

    // consonant-vowel-consonant ending at i, final consonant not w/x/y.
    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        char ch = b[static_cast<size_t>(i)];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view s) {
        if (s.size() > b.size()) return false;
        if (b.compare(b.size() - s.size(), s.size(), s) != 0) return false;
        j = static_cast<int>(b.size() - s.size()) - 1;
        return true;
    }

    void set_to(std::string_view s) {
        b.erase(static_cast<size_t>(j + 1));
        b += s;
    }

    void replace_if_m(std::string_view s) {
        if (m() > 0) set_to(s);
    }

    void step1ab() {
        if (b.back() == 's') {
            if (ends("sses")) {
                b.erase(b.size() - 2);
            } else if (ends("ies")) {
                set_to("i");
            } else if (b[b.size() - 2] != 's') {
                b.pop_back();
            }
        }
        if (ends("eed")) {
            if (m() > 0) b.pop_back();
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            b.erase(static_cast<size_t>(j + 1));
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (double_cons(last())) {
                char ch = b.back();
                b.pop_back();
                if (b.back() == 'l' || b.back() == 's' || b.back() == 'z') {
                    b.push_back(ch);
                }
            } else {
                j = last();
                if (m() == 1 && cvc(last())) set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b.back() = 'i';
    }

    void step2() {
        if (b.size() < 2) return;
        switch (b[b.size() - 2]) {
            case 'a':
                if (ends("ational")) { replace_if_m("ate"); break; }
                if (ends("tional")) { replace_if_m("tion"); break; }
                break;
            case 'c':
                if (ends("enci")) { replace_if_m("ence"); break; }
                if (ends("anci")) { replace_if_m("ance"); break; }
                break;
            case 'e':
                if (ends("izer")) { replace_if_m("ize"); break; }
                break;
            case 'l':
                if (ends("bli")) { replace_if_m("ble"); break; }
                if (ends("alli")) { replace_if_m("al"); break; }
                if (ends("entli")) { replace_if_m("ent"); break; }
                if (ends("eli")) { replace_if_m("e"); break; }
                if (ends("ousli")) { replace_if_m("ous"); break; }
                break;
            case 'o':
                if (ends("ization")) { replace_if_m("ize"); break; }
                if (ends("ation")) { replace_if_m("ate"); break; }
                if (ends("ator")) { replace_if_m("ate"); break; }
                break;
            case 's':
                if (ends("alism")) { replace_if_m("al"); break; }
                if (ends("iveness")) { replace_if_m("ive"); break; }
                if (ends("fulness")) { replace_if_m("ful"); break; }
                if (ends("ousness")) { replace_if_m("ous"); break; }
                break;
            case 't':
                if (ends("aliti")) { replace_if_m("al"); break; }
                if (ends("iviti")) { replace_if_m("ive"); break; }
                if (ends("biliti")) { replace_if_m("ble"); break; }
                break;
            case 'g':
                if (ends("logi")) { replace_if_m("log"); break; }
                break;
            default:
                break;
        }
    }

    void step3() {
        switch (b.back()) {
            case 'e':
                if (ends("icate")) { replace_if_m("ic"); break; }
                if (ends("ative")) { replace_if_m(""); break; }
                if (ends("alize")) { replace_if_m("al"); break; }
                break;
            case 'i':
                if (ends("iciti")) { replace_if_m("ic"); break; }
                break;
            case 'l':
                if (ends("ical")) { replace_if_m("ic"); break; }
                if (ends("ful")) { replace_if_m(""); break; }
                break;
            case 's':
                if (ends("ness")) { replace_if_m(""); break; }
                break;
            default:
                break;
        }
    }

    void step4() {
        if (b.size() < 2) return;
        switch (b[b.size() - 2]) {
            case 'a':
                if (ends("al")) break;
                return;
            case 'c':
                if (ends("ance")) break;
                if (ends("ence")) break;
                return;
            case 'e':
                if (ends("er")) break;
                return;
            case 'i':
                if (ends("ic")) break;
                return;
            case 'l':
                if (ends("able")) break;
                if (ends("ible")) break;
                return;
            case 'n':
                if (ends("ant")) break;
                if (ends("ement")) break;
                if (ends("ment")) break;
                if (ends("ent")) break;
                return;
            case 'o':
                if (ends("ion") && j >= 0 &&
                    (b[static_cast<size_t>(j)] == 's' || b[static_cast<size_t>(j)] == 't')) {
                    break;
                }
                if (ends("ou")) break;
                return;
            case 's':
                if (ends("ism")) break;
                return;
            case 't':
                if (ends("ate")) break;
                if (ends("iti")) break;
                return;
            case 'u':
                if (ends("ous")) break;
                return;
            case 'v':
                if (ends("ive")) break;
                return;
            case 'z':
                if (ends("ize")) break;
                return;
            default:
                return;
        }
        if (m() > 1) b.erase(static_cast<size_t>(j + 1));
    }

    void step5() {
        j = last();
        if (b.back() == 'e') {
            int a = m();
            if (a > 1 || (a == 1 && !cvc(last() - 1))) b.pop_back();
        }
        j = last();
        if (b.back() == 'l' && double_cons(last()) && m() > 1) b.pop_back();
    }

    std::string run() {
        step1ab();
        step1c();
        step2();
        step3();
        step4();
        step5();
        return std::move(b);
    }
};

}  // namespace

std::string porter_stem(std::string_view word) {
    std::string lower;
    lower.reserve(word.size());
    for (unsigned char c : word) {
        lower.push_back(static_cast<char>(std::tolower(c)));
    }
    if (lower.size() <= 2) return lower;
    if (!std::all_of(lower.begin(), lower.end(),
                     [](unsigned char c) { return c >= 'a' && c <= 'z'; })) {
        return lower;
    }
    return Porter(std::move(lower)).run();
}

}  // namespace fop

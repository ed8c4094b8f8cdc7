#include <string>

#include "hashgen/metrics.hpp"

namespace hashgen {

namespace {

// Porter 1980. Works on a lowercase buffer; positions index [0, end].
struct Stemmer {
    std::string b;
    int end = 0; // index of the last letter

    bool is_consonant(int i) const {
        switch (b[static_cast<std::size_t>(i)]) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return false;
            case 'y': return i == 0 ? true : !is_consonant(i - 1);
            default: return true;
        }
    }

    // Number of VC sequences in [C](VC)^m[V], measured over b[0..j].
    int measure(int j) const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j) return n;
            if (!is_consonant(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j) return n;
                if (is_consonant(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j) return n;
                if (!is_consonant(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem(int j) const {
        for (int i = 0; i <= j; ++i)
            if (!is_consonant(i)) return true;
        return false;
    }

    bool double_consonant(int j) const {
        if (j < 1) return false;
        if (b[static_cast<std::size_t>(j)] != b[static_cast<std::size_t>(j - 1)]) return false;
        return is_consonant(j);
    }

    // consonant-vowel-consonant ending where the final consonant is not w, x or y
    bool cvc(int i) const {
        if (i < 2 || !is_consonant(i) || is_consonant(i - 1) || !is_consonant(i - 2)) return false;
        char c = b[static_cast<std::size_t>(i)];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(const char* s) {
        int len = static_cast<int>(std::char_traits<char>::length(s));
        if (len > end + 1) return false;
        if (b.compare(static_cast<std::size_t>(end - len + 1), static_cast<std::size_t>(len), s) != 0)
            return false;
        j = end - len;
        return true;
    }

    void set_to(const char* s) {
        int len = static_cast<int>(std::char_traits<char>::length(s));
        b.replace(static_cast<std::size_t>(j + 1), b.size(), s);
        end = j + len;
    }

    void replace_if_m_positive(const char* s) {
        if (measure(j) > 0) set_to(s);
    }

    int j = 0; // stem end after a suffix match

    void step1ab() {
        if (b[static_cast<std::size_t>(end)] == 's') {
            if (ends("sses"))
                end -= 2;
            else if (ends("ies"))
                set_to("i");
            else if (b[static_cast<std::size_t>(end - 1)] != 's')
                --end;
        }
        if (ends("eed")) {
            if (measure(j) > 0) --end;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem(j)) {
            end = j;
            if (ends("at"))
                set_to("ate");
            else if (ends("bl"))
                set_to("ble");
            else if (ends("iz"))
                set_to("ize");
            else if (double_consonant(end)) {
                --end;
                char c = b[static_cast<std::size_t>(end)];
                if (c == 'l' || c == 's' || c == 'z') ++end;
            } else if (measure(end) == 1 && cvc(end)) {
                j = end;
                set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem(j)) b[static_cast<std::size_t>(end)] = 'i';
    }

    void step2() {
        switch (b[static_cast<std::size_t>(end - 1)]) {
            case 'a':
                if (ends("ational")) { replace_if_m_positive("ate"); break; }
                if (ends("tional")) { replace_if_m_positive("tion"); break; }
                break;
            case 'c':
                if (ends("enci")) { replace_if_m_positive("ence"); break; }
                if (ends("anci")) { replace_if_m_positive("ance"); break; }
                break;
            case 'e':
                if (ends("izer")) { replace_if_m_positive("ize"); break; }
                break;
            case 'l':
                if (ends("bli")) { replace_if_m_positive("ble"); break; }
                if (ends("alli")) { replace_if_m_positive("al"); break; }
                if (ends("entli")) { replace_if_m_positive("ent"); break; }
                if (ends("eli")) { replace_if_m_positive("e"); break; }
                if (ends("ousli")) { replace_if_m_positive("ous"); break; }
                break;
            case 'o':
                if (ends("ization")) { replace_if_m_positive("ize"); break; }
                if (ends("ation")) { replace_if_m_positive("ate"); break; }
                if (ends("ator")) { replace_if_m_positive("ate"); break; }
                break;
            case 's':
                if (ends("alism")) { replace_if_m_positive("al"); break; }
                if (ends("iveness")) { replace_if_m_positive("ive"); break; }
                if (ends("fulness")) { replace_if_m_positive("ful"); break; }
                if (ends("ousness")) { replace_if_m_positive("ous"); break; }
                break;
            case 't':
                if (ends("aliti")) { replace_if_m_positive("al"); break; }
                if (ends("iviti")) { replace_if_m_positive("ive"); break; }
                if (ends("biliti")) { replace_if_m_positive("ble"); break; }
                break;
            default: break;
        }
    }

    void step3() {
        switch (b[static_cast<std::size_t>(end)]) {
            case 'e':
                if (ends("icate")) { replace_if_m_positive("ic"); break; }
                if (ends("ative")) { replace_if_m_positive(""); break; }
                if (ends("alize")) { replace_if_m_positive("al"); break; }
                break;
            case 'i':
                if (ends("iciti")) { replace_if_m_positive("ic"); break; }
                break;
            case 'l':
                if (ends("ical")) { replace_if_m_positive("ic"); break; }
                if (ends("ful")) { replace_if_m_positive(""); break; }
                break;
            case 's':
                if (ends("ness")) { replace_if_m_positive(""); break; }
                break;
            default: break;
        }
    }

    void step4() {
        switch (b[static_cast<std::size_t>(end - 1)]) {
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
                    (b[static_cast<std::size_t>(j)] == 's' || b[static_cast<std::size_t>(j)] == 't'))
                    break;
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
            default: return;
        }
        if (measure(j) > 1) end = j;
    }

    void step5() {
        j = end;
        if (b[static_cast<std::size_t>(end)] == 'e') {
            int m = measure(end - 1);
            if (m > 1 || (m == 1 && !cvc(end - 1))) --end;
        }
        if (b[static_cast<std::size_t>(end)] == 'l' && double_consonant(end) && measure(end - 1) > 1) --end;
    }
};

} // namespace

std::string porter_stem(const std::string& word) {
    if (word.size() <= 2) return word;
    for (char c : word)
        if (c < 'a' || c > 'z') return word; // only plain lowercase ASCII words are stemmed

    Stemmer s;
    s.b = word;
    s.end = static_cast<int>(word.size()) - 1;
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    return s.b.substr(0, static_cast<std::size_t>(s.end) + 1);
}

} // namespace hashgen

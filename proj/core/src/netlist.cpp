#include "ulpsim/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "ulpsim/errors.hpp"

namespace ulpsim {

namespace {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_ground_name(const std::string& lower) { return lower == "0" || lower == "gnd"; }

std::vector<std::string> tokenize_card(const std::string& text) {
    // '(' ')' '=' and ',' act as separators but '=' is kept as its own token
    // so key=value pairs survive arbitrary spacing.
    std::string norm;
    norm.reserve(text.size() + 8);
    for (char ch : text) {
        if (ch == '(' || ch == ')' || ch == ',') {
            norm.push_back(' ');
        } else if (ch == '=') {
            norm += " = ";
        } else {
            norm.push_back(ch);
        }
    }
    std::vector<std::string> toks;
    std::istringstream iss(norm);
    std::string t;
    while (iss >> t) toks.push_back(t);
    return toks;
}

double parse_value_at(const std::string& tok, int line) {
    try {
        return parse_value(tok);
    } catch (const ParseError& e) {
        throw ElaborationError(std::string(e.what()), line);
    }
}

} // namespace

double parse_value(std::string_view token) {
    token = trim(token);
    if (token.empty()) throw ParseError("empty numeric token");
    double mantissa = 0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, mantissa);
    if (ec != std::errc() || ptr == begin) {
        throw ParseError("malformed numeral '" + std::string(token) + "'");
    }
    std::string suffix = to_lower(std::string_view(ptr, end - ptr));
    if (suffix.empty()) return mantissa;
    // `meg` must match before `m`.
    static const std::pair<const char*, double> kSuffixes[] = {
        {"meg", 1e6}, {"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6},
        {"m", 1e-3},  {"k", 1e3},   {"g", 1e9},   {"t", 1e12},
    };
    for (const auto& [s, mult] : kSuffixes) {
        if (suffix == s) return mantissa * mult;
    }
    throw ParseError("unknown unit suffix '" + suffix + "' in '" + std::string(token) + "'");
}

RawDeck parse_netlist(std::string_view text) {
    if (trim(text).empty()) throw ParseError("empty deck");

    std::vector<std::string> lines;
    {
        std::string cur;
        for (char ch : text) {
            if (ch == '\n') {
                if (!cur.empty() && cur.back() == '\r') cur.pop_back();
                lines.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        lines.push_back(cur);
    }

    RawDeck deck;
    deck.title = std::string(trim(lines.empty() ? "" : lines[0]));
    if (!deck.title.empty() && deck.title.front() == '.') {
        throw ParseError("directive '" + deck.title + "' before title line", 1);
    }

    bool ended = false;
    for (size_t i = 1; i < lines.size() && !ended; ++i) {
        const int lineno = static_cast<int>(i) + 1;
        std::string_view raw = lines[i];
        // full-line '*' comment
        std::string_view t = trim(raw);
        if (t.empty() || t.front() == '*') continue;
        // trailing ';' comment
        if (auto pos = t.find(';'); pos != std::string_view::npos) {
            t = trim(t.substr(0, pos));
            if (t.empty()) continue;
        }
        if (t.front() == '+') {
            if (deck.cards.empty()) {
                throw ParseError("continuation line with no card to continue", lineno);
            }
            deck.cards.back().text += ' ';
            deck.cards.back().text += std::string(trim(t.substr(1)));
            continue;
        }
        if (to_lower(t) == ".end") {
            ended = true;
            continue;
        }
        deck.cards.push_back(Card{std::string(t), lineno});
    }

    // duplicate element names (case-insensitive, directives excluded)
    std::set<std::string> seen;
    for (const auto& c : deck.cards) {
        if (c.text.front() == '.') continue;
        auto toks = tokenize_card(c.text);
        if (toks.empty()) continue;
        std::string name = to_lower(toks[0]);
        if (!seen.insert(name).second) {
            throw ParseError("duplicate device name '" + toks[0] + "'", c.line);
        }
    }
    return deck;
}

namespace {

class Elaborator {
public:
    explicit Elaborator(const RawDeck& deck) : deck_(deck) {
        circ_.title = deck.title;
        circ_.node_names.push_back("0");
        circ_.node_index["0"] = 0;
        circ_.node_index["gnd"] = 0;
    }

    Circuit run() {
        for (const auto& card : deck_.cards) {
            auto toks = tokenize_card(card.text);
            if (toks.empty()) continue;
            const char head = static_cast<char>(std::tolower(static_cast<unsigned char>(toks[0][0])));
            switch (head) {
                case 'm': parse_mosfet(card, toks); break;
                case 'r': parse_two_terminal(card, toks, /*is_res=*/true); break;
                case 'c': parse_two_terminal(card, toks, /*is_res=*/false); break;
                case 'v': parse_vsource(card, toks); break;
                case '.': parse_directive(card, toks); break;
                default:
                    throw ElaborationError("unsupported element card '" + toks[0] + "'", card.line);
            }
        }
        check();
        return std::move(circ_);
    }

private:
    int node_of(const std::string& name) {
        std::string key = to_lower(name);
        if (is_ground_name(key)) return 0;
        auto it = circ_.node_index.find(key);
        if (it != circ_.node_index.end()) return it->second;
        int idx = static_cast<int>(circ_.node_names.size());
        circ_.node_index.emplace(key, idx);
        circ_.node_names.push_back(key);
        return idx;
    }

    void need(bool cond, const Card& card, const std::string& msg) {
        if (!cond) throw ElaborationError(msg, card.line);
    }

    void parse_mosfet(const Card& card, const std::vector<std::string>& t) {
        need(t.size() >= 6, card, "MOSFET card needs d g s b model W= L=");
        Mosfet m;
        m.drain = node_of(t[1]);
        m.gate = node_of(t[2]);
        m.source = node_of(t[3]);
        m.bulk = node_of(t[4]);
        m.model = to_lower(t[5]);
        bool have_w = false, have_l = false;
        for (size_t i = 6; i < t.size(); i += 3) {
            need(i + 2 < t.size() && t[i + 1] == "=", card,
                 "expected key=value after model name, got '" + t[i] + "'");
            const std::string key = to_lower(t[i]);
            const double val = parse_value_at(t[i + 2], card.line);
            if (key == "w") {
                m.width = val;
                have_w = true;
            } else if (key == "l") {
                m.length = val;
                have_l = true;
            } else {
                throw ElaborationError("unknown MOSFET parameter '" + t[i] + "'", card.line);
            }
        }
        need(have_w && have_l, card, "MOSFET card requires both W= and L=");
        need(m.width > 0 && m.length > 0, card, "W and L must be strictly positive");
        const double ratio = m.width / m.length;
        need(ratio >= 0.1 && ratio <= 1000.0, card,
             "W/L = " + std::to_string(ratio) + " outside sanity range [0.1, 1000]");
        circ_.devices.push_back({t[0], m});
    }

    void parse_two_terminal(const Card& card, const std::vector<std::string>& t, bool is_res) {
        need(t.size() == 4, card, std::string(is_res ? "resistor" : "capacitor") +
                                      " card needs two nodes and a value");
        const int n1 = node_of(t[1]);
        const int n2 = node_of(t[2]);
        const double val = parse_value_at(t[3], card.line);
        need(val > 0, card, "element value must be strictly positive");
        if (is_res) {
            circ_.devices.push_back({t[0], Resistor{n1, n2, val}});
        } else {
            circ_.devices.push_back({t[0], Capacitor{n1, n2, val}});
        }
    }

    void parse_vsource(const Card& card, const std::vector<std::string>& t) {
        need(t.size() >= 5, card, "voltage source card needs nodes and a drive");
        VSource v;
        v.npos = node_of(t[1]);
        v.nneg = node_of(t[2]);
        const std::string kind = to_lower(t[3]);
        if (kind == "dc") {
            need(t.size() == 5, card, "DC drive takes exactly one value");
            v.drive = DcSpec{parse_value_at(t[4], card.line)};
        } else if (kind == "pulse") {
            need(t.size() == 11, card, "PULSE drive takes 7 values");
            PulseSpec p;
            p.v1 = parse_value_at(t[4], card.line);
            p.v2 = parse_value_at(t[5], card.line);
            p.t_delay = parse_value_at(t[6], card.line);
            p.t_rise = parse_value_at(t[7], card.line);
            p.t_fall = parse_value_at(t[8], card.line);
            p.t_pw = parse_value_at(t[9], card.line);
            p.t_period = parse_value_at(t[10], card.line);
            need(p.t_rise > 0 && p.t_fall > 0, card, "pulse t_rise and t_fall must be > 0");
            need(p.t_period >= p.t_rise + p.t_pw + p.t_fall, card,
                 "pulse period shorter than rise + width + fall");
            v.drive = p;
        } else {
            throw ElaborationError("unsupported source drive '" + t[3] + "'", card.line);
        }
        circ_.devices.push_back({t[0], v});
    }

    void parse_directive(const Card& card, const std::vector<std::string>& t) {
        const std::string d = to_lower(t[0]);
        if (d == ".model") {
            need(t.size() >= 3, card, ".model needs a name and a type");
            const std::string name = to_lower(t[1]);
            const std::string type = to_lower(t[2]);
            MosModel m;
            if (type == "nmos") {
                m.polarity = Polarity::nmos;
            } else if (type == "pmos") {
                m.polarity = Polarity::pmos;
            } else {
                throw ElaborationError("unknown model type '" + t[2] + "'", card.line);
            }
            for (size_t i = 3; i < t.size(); i += 3) {
                need(i + 2 < t.size() && t[i + 1] == "=", card,
                     "expected key=value in model card, got '" + t[i] + "'");
                const std::string key = to_lower(t[i]);
                const double val = parse_value_at(t[i + 2], card.line);
                if (key == "vth0") m.vth0 = val;
                else if (key == "n") m.n_slope = val;
                else if (key == "kp") m.kp = val;
                else if (key == "lambda") m.lambda = val;
                else if (key == "cox") m.cox_area = val;
                else if (key == "tcvth") m.tc_vth = val;
                else if (key == "muexp") m.mu_exp = val;
                else throw ElaborationError("unknown model parameter '" + t[i] + "'", card.line);
            }
            m.validate(name);
            if (!circ_.models.emplace(name, m).second) {
                throw ElaborationError("model '" + name + "' defined twice", card.line);
            }
        } else if (d == ".tran") {
            need(t.size() == 3, card, ".tran needs t_step and t_stop");
            TranSpec ts{parse_value_at(t[1], card.line), parse_value_at(t[2], card.line)};
            need(ts.t_step > 0, card, "t_step must be > 0");
            need(ts.t_stop > ts.t_step, card, "t_stop must exceed t_step");
            bool replaced = false;
            for (auto& a : circ_.analyses) {
                if (std::holds_alternative<TranSpec>(a)) {
                    a = ts;
                    replaced = true;
                }
            }
            if (replaced) {
                circ_.diagnostics.push_back("duplicate .tran card; last one wins (line " +
                                            std::to_string(card.line) + ")");
            } else {
                circ_.analyses.push_back(ts);
            }
        } else if (d == ".temp") {
            need(t.size() == 2, card, ".temp needs one value");
            TempSpec temp{parse_value_at(t[1], card.line)};
            circ_.analyses.push_back(temp);
            circ_.global_temp_c = temp.celsius;
        } else {
            throw ElaborationError("unsupported directive '" + t[0] + "'", card.line);
        }
    }

    void check() {
        // model references
        for (const auto& dev : circ_.devices) {
            if (const auto* m = std::get_if<Mosfet>(&dev.kind)) {
                if (!circ_.models.count(m->model)) {
                    throw ElaborationError("device '" + dev.name + "' references undeclared model '" +
                                           m->model + "'");
                }
            }
        }
        // floating nodes: every non-ground node needs >= 2 terminal
        // connections (bulk excluded, it carries no current).
        const int n = circ_.num_nodes();
        std::vector<int> touch(n, 0);
        std::vector<int> parent(n);
        for (int i = 0; i < n; ++i) parent[i] = i;
        auto find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
        auto mark = [&](std::initializer_list<int> nodes) {
            int first = -1;
            for (int nd : nodes) {
                if (nd != 0) ++touch[nd];
                if (first < 0) first = nd;
                else unite(first, nd);
            }
        };
        for (const auto& dev : circ_.devices) {
            std::visit(
                [&](const auto& k) {
                    using T = std::decay_t<decltype(k)>;
                    if constexpr (std::is_same_v<T, Mosfet>) {
                        mark({k.drain, k.gate, k.source});
                    } else if constexpr (std::is_same_v<T, Resistor> ||
                                         std::is_same_v<T, Capacitor>) {
                        mark({k.n1, k.n2});
                    } else {
                        mark({k.npos, k.nneg});
                    }
                },
                dev.kind);
        }
        std::string bad;
        for (int i = 1; i < n; ++i) {
            if (touch[i] < 2) bad += (bad.empty() ? "" : ", ") + circ_.node_names[i];
        }
        if (!bad.empty()) {
            throw ElaborationError("floating node(s) with a single connection: " + bad);
        }
        for (int i = 1; i < n; ++i) {
            if (find(i) != find(0)) bad += (bad.empty() ? "" : ", ") + circ_.node_names[i];
        }
        if (!bad.empty()) {
            throw ElaborationError("node(s) with no element path to ground: " + bad);
        }
    }

    const RawDeck& deck_;
    Circuit circ_;
};

std::string fmt_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

int Circuit::node(const std::string& name) const {
    std::string key = to_lower(name);
    if (is_ground_name(key)) return 0;
    auto it = node_index.find(key);
    if (it == node_index.end()) throw DomainError("unknown node '" + name + "'");
    return it->second;
}

const DeviceInstance* Circuit::find_device(const std::string& name) const {
    const std::string key = to_lower(name);
    for (const auto& d : devices) {
        if (to_lower(d.name) == key) return &d;
    }
    return nullptr;
}

const TranSpec* Circuit::tran() const {
    const TranSpec* found = nullptr;
    for (const auto& a : analyses) {
        if (const auto* t = std::get_if<TranSpec>(&a)) found = t;
    }
    return found;
}

bool Circuit::operator==(const Circuit& o) const {
    return title == o.title && node_names == o.node_names && devices == o.devices &&
           models == o.models && analyses == o.analyses && global_temp_c == o.global_temp_c;
}

Circuit elaborate(const RawDeck& deck) { return Elaborator(deck).run(); }

Circuit compile_netlist(std::string_view text) { return elaborate(parse_netlist(text)); }

std::string unparse(const Circuit& c) {
    std::ostringstream os;
    os << c.title << "\n";
    for (const auto& dev : c.devices) {
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Mosfet>) {
                    os << dev.name << ' ' << c.node_names[k.drain] << ' ' << c.node_names[k.gate]
                       << ' ' << c.node_names[k.source] << ' ' << c.node_names[k.bulk] << ' '
                       << k.model << " W=" << fmt_value(k.width) << " L=" << fmt_value(k.length);
                } else if constexpr (std::is_same_v<T, Resistor>) {
                    os << dev.name << ' ' << c.node_names[k.n1] << ' ' << c.node_names[k.n2] << ' '
                       << fmt_value(k.ohms);
                } else if constexpr (std::is_same_v<T, Capacitor>) {
                    os << dev.name << ' ' << c.node_names[k.n1] << ' ' << c.node_names[k.n2] << ' '
                       << fmt_value(k.farads);
                } else {
                    os << dev.name << ' ' << c.node_names[k.npos] << ' ' << c.node_names[k.nneg];
                    if (const auto* dc = std::get_if<DcSpec>(&k.drive)) {
                        os << " DC " << fmt_value(dc->volts);
                    } else {
                        const auto& p = std::get<PulseSpec>(k.drive);
                        os << " PULSE(" << fmt_value(p.v1) << ' ' << fmt_value(p.v2) << ' '
                           << fmt_value(p.t_delay) << ' ' << fmt_value(p.t_rise) << ' '
                           << fmt_value(p.t_fall) << ' ' << fmt_value(p.t_pw) << ' '
                           << fmt_value(p.t_period) << ')';
                    }
                }
                os << "\n";
            },
            dev.kind);
    }
    for (const auto& [name, m] : c.models) {
        os << ".model " << name << ' ' << (m.polarity == Polarity::nmos ? "nmos" : "pmos") << " ("
           << "vth0=" << fmt_value(m.vth0) << " n=" << fmt_value(m.n_slope)
           << " kp=" << fmt_value(m.kp) << " lambda=" << fmt_value(m.lambda)
           << " cox=" << fmt_value(m.cox_area) << " tcvth=" << fmt_value(m.tc_vth)
           << " muexp=" << fmt_value(m.mu_exp) << ")\n";
    }
    for (const auto& a : c.analyses) {
        if (const auto* t = std::get_if<TranSpec>(&a)) {
            os << ".tran " << fmt_value(t->t_step) << ' ' << fmt_value(t->t_stop) << "\n";
        } else if (const auto* temp = std::get_if<TempSpec>(&a)) {
            os << ".temp " << fmt_value(temp->celsius) << "\n";
        }
    }
    os << ".end\n";
    return os.str();
}

namespace {

template <typename Fn>
Circuit rebuild(const Circuit& c, Fn&& edit) {
    Circuit out = c;
    edit(out);
    return out;
}

} // namespace

Circuit with_pulse_amplitude(const Circuit& c, const std::string& source, double v2) {
    return rebuild(c, [&](Circuit& out) {
        for (auto& d : out.devices) {
            if (to_lower(d.name) != to_lower(source)) continue;
            auto* v = std::get_if<VSource>(&d.kind);
            if (!v || !std::holds_alternative<PulseSpec>(v->drive)) {
                throw DomainError("'" + source + "' is not a pulse source");
            }
            std::get<PulseSpec>(v->drive).v2 = v2;
            return;
        }
        throw DomainError("unknown source '" + source + "'");
    });
}

Circuit with_pulse_frequency(const Circuit& c, const std::string& source, double f) {
    if (!(f > 0)) throw DomainError("pulse frequency must be positive");
    return rebuild(c, [&](Circuit& out) {
        for (auto& d : out.devices) {
            if (to_lower(d.name) != to_lower(source)) continue;
            auto* v = std::get_if<VSource>(&d.kind);
            if (!v || !std::holds_alternative<PulseSpec>(v->drive)) {
                throw DomainError("'" + source + "' is not a pulse source");
            }
            auto& p = std::get<PulseSpec>(v->drive);
            p.t_period = 1.0 / f;
            p.t_pw = 0.5 * p.t_period - p.t_rise;
            if (!(p.t_pw > 0)) {
                throw DomainError("pulse edges no longer fit the half period at " +
                                  std::to_string(f) + " Hz");
            }
            return;
        }
        throw DomainError("unknown source '" + source + "'");
    });
}

Circuit with_dc_value(const Circuit& c, const std::string& source, double volts) {
    return rebuild(c, [&](Circuit& out) {
        for (auto& d : out.devices) {
            if (to_lower(d.name) != to_lower(source)) continue;
            auto* v = std::get_if<VSource>(&d.kind);
            if (!v || !std::holds_alternative<DcSpec>(v->drive)) {
                throw DomainError("'" + source + "' is not a DC source");
            }
            std::get<DcSpec>(v->drive).volts = volts;
            return;
        }
        throw DomainError("unknown source '" + source + "'");
    });
}

Circuit with_device_width(const Circuit& c, const std::string& device, double width) {
    return rebuild(c, [&](Circuit& out) {
        for (auto& d : out.devices) {
            if (to_lower(d.name) != to_lower(device)) continue;
            auto* m = std::get_if<Mosfet>(&d.kind);
            if (!m) throw DomainError("'" + device + "' is not a MOSFET");
            const double ratio = width / m->length;
            if (!(width > 0) || ratio < 0.1 || ratio > 1000.0) {
                throw DomainError("width " + std::to_string(width) + " m puts '" + device +
                                  "' outside the W/L sanity range [0.1, 1000]");
            }
            m->width = width;
            return;
        }
        throw DomainError("unknown device '" + device + "'");
    });
}

Circuit with_tran(const Circuit& c, double t_step, double t_stop) {
    return rebuild(c, [&](Circuit& out) {
        bool replaced = false;
        for (auto& a : out.analyses) {
            if (std::holds_alternative<TranSpec>(a)) {
                a = TranSpec{t_step, t_stop};
                replaced = true;
            }
        }
        if (!replaced) out.analyses.push_back(TranSpec{t_step, t_stop});
    });
}

} // namespace ulpsim

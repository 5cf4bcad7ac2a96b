#include "ntnpred/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "ntnpred/errors.hpp"
#include "ntnpred/io.hpp"

namespace ntnpred {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_number(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto r = std::from_chars(first, t.data() + t.size(), out);
    return r.ec == std::errc() && r.ptr == t.data() + t.size();
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return k.front() != '.' && k.back() != '.' && k.find("..") == std::string::npos;
}

// Strips a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

ConfigValue parse_value(const std::string& raw, const std::string& where) {
    const std::string v = trim(raw);
    if (v.empty()) throw ConfigError(where + ": missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') throw ConfigError(where + ": unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                const char e = v[++i];
                out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
            } else if (v[i] == '"') {
                throw ConfigError(where + ": stray quote in string");
            } else {
                out += v[i];
            }
        }
        return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') throw ConfigError(where + ": unterminated array");
        std::vector<double> arr;
        const std::string body = trim(v.substr(1, v.size() - 2));
        if (body.empty()) return arr;
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (trim(item).empty() && ss.eof()) break;  // trailing comma
            double d = 0.0;
            if (!parse_number(item, d)) throw ConfigError(where + ": array element '" + trim(item) + "' is not a number");
            arr.push_back(d);
        }
        return arr;
    }
    double d = 0.0;
    if (!parse_number(v, d)) throw ConfigError(where + ": cannot parse value '" + v + "'");
    return d;
}

const char* type_name(const ConfigValue& v) {
    switch (v.index()) {
        case 0: return "boolean";
        case 1: return "number";
        case 2: return "string";
        default: return "array";
    }
}

// Typed readers. Each binds a key to a setter that throws on a type mismatch.
class Binder {
public:
    Binder(const ConfigDoc& doc) : doc_(doc) {}

    void number(const std::string& key, const std::function<void(double)>& set) { bind(key, set, 1); }
    void integer(const std::string& key, const std::function<void(long long)>& set, long long lo = 0) {
        known_.insert(key);
        const auto it = doc_.entries.find(key);
        if (it == doc_.entries.end()) return;
        const auto* d = std::get_if<double>(&it->second.value);
        if (!d) throw mismatch(key, it->second, "integer");
        if (*d != std::floor(*d) || std::abs(*d) > 9.0e15) throw mismatch(key, it->second, "integer");
        if (*d < static_cast<double>(lo))
            throw ConfigError(where(key, it->second) + ": must be >= " + std::to_string(lo));
        set(static_cast<long long>(*d));
    }
    void string(const std::string& key, const std::function<void(const std::string&)>& set) { bind(key, set, 2); }
    void boolean(const std::string& key, const std::function<void(bool)>& set) { bind(key, set, 0); }
    void array(const std::string& key, const std::function<void(const std::vector<double>&)>& set) {
        bind(key, set, 3);
    }

    /// Rejects every entry no reader asked about.
    void reject_unknown(const std::set<std::string>& also_known) const {
        for (const auto& [k, e] : doc_.entries)
            if (!known_.count(k) && !also_known.count(k)) throw ConfigError(where(k, e) + ": unknown key '" + k + "'");
    }
    const std::set<std::string>& known() const { return known_; }

private:
    template <class F>
    void bind(const std::string& key, const F& set, std::size_t index) {
        known_.insert(key);
        const auto it = doc_.entries.find(key);
        if (it == doc_.entries.end()) return;
        const auto& v = it->second.value;
        static const char* names[] = {"boolean", "number", "string", "array"};
        if (v.index() != index) throw mismatch(key, it->second, names[index]);
        try {
            if constexpr (std::is_invocable_v<F, bool>) {
                if (index == 0) set(std::get<bool>(v));
            }
            if constexpr (std::is_invocable_v<F, double>) {
                if (index == 1) set(std::get<double>(v));
            }
            if constexpr (std::is_invocable_v<F, const std::string&>) {
                if (index == 2) set(std::get<std::string>(v));
            }
            if constexpr (std::is_invocable_v<F, const std::vector<double>&>) {
                if (index == 3) set(std::get<std::vector<double>>(v));
            }
        } catch (const ConfigError& e) {
            throw ConfigError(where(key, it->second) + ": " + e.what());
        }
    }
    std::string where(const std::string& key, const ConfigEntry& e) const {
        return doc_.source + ":" + std::to_string(e.line) + ": " + key;
    }
    ConfigError mismatch(const std::string& key, const ConfigEntry& e, const char* want) const {
        return ConfigError(where(key, e) + ": expected " + want + ", got " + type_name(e.value));
    }

    const ConfigDoc& doc_;
    std::set<std::string> known_;
};

void bind_train(Binder& b, TrainConfig& c) {
    b.integer("train.batch_size", [&](long long v) { c.batch_size = static_cast<std::size_t>(v); }, 1);
    b.array("train.eb_n0_grid_db", [&](const std::vector<double>& v) { c.eb_n0_grid_db = v; });
    b.number("train.l2", [&](double v) { c.l2 = v; });
    b.integer("train.early_stop_patience_cycles", [&](long long v) { c.early_stop_patience_cycles = static_cast<int>(v); }, 1);
    b.string("train.channel_profile", [&](const std::string& v) { c.channel_profile = v; });
    b.number("train.ue_speed_kmh", [&](double v) { c.ue_speed_kmh = v; });
    b.integer("train.data_mod_order", [&](long long v) { c.data_mod_order = static_cast<int>(v); });
    b.integer("train.seed", [&](long long v) { c.seed = static_cast<std::uint64_t>(v); });
    b.number("train.carrier_hz", [&](double v) { c.carrier_hz = v; });
    b.number("train.delay_spread_s", [&](double v) { c.delay_spread_s = v; });
    b.number("train.code_rate", [&](double v) { c.code_rate = v; });
    b.string("train.flip", [&](const std::string& v) { c.flip = flip_placement_from_string(v); });
    b.integer("train.max_epochs", [&](long long v) { c.max_epochs = static_cast<int>(v); });
    b.integer("train.steps_per_epoch", [&](long long v) { c.steps_per_epoch = static_cast<int>(v); }, 1);
    b.integer("train.validation_size", [&](long long v) { c.validation_size = static_cast<std::size_t>(v); });
    b.number("train.constant_lr", [&](double v) { c.constant_lr = v; });
    b.number("train.bn_momentum", [&](double v) { c.bn_momentum = v; });
    b.boolean("train.freeze_dataset", [&](bool v) { c.freeze_dataset = v; });
    b.number("train.lr_schedule.max_lr", [&](double v) { c.lr_schedule.max_lr = v; });
    b.number("train.lr_schedule.min_lr", [&](double v) { c.lr_schedule.min_lr = v; });
    b.integer("train.lr_schedule.warmup_epochs", [&](long long v) { c.lr_schedule.warmup_epochs = static_cast<int>(v); });
    b.integer("train.lr_schedule.annealing_period_epochs",
              [&](long long v) { c.lr_schedule.annealing_period_epochs = static_cast<int>(v); }, 1);
}

void bind_scenario(Binder& b, ScenarioConfig& c, const std::filesystem::path& base_dir) {
    b.number("scenario.eb_n0_db", [&](double v) { c.eb_n0_db = v; });
    b.integer("scenario.data_mod_order", [&](long long v) { c.data_mod_order = static_cast<int>(v); });
    b.number("scenario.code_rate", [&](double v) { c.code_rate = v; });
    b.string("scenario.channel_profile", [&](const std::string& v) { c.channel_profile = v; });
    b.number("scenario.ue_speed_kmh", [&](double v) { c.ue_speed_kmh = v; });
    b.number("scenario.carrier_hz", [&](double v) { c.carrier_hz = v; });
    b.number("scenario.delay_spread_s", [&](double v) { c.delay_spread_s = v; });
    b.string("scenario.checkpoint", [&](const std::string& v) {
        const std::filesystem::path p(v);
        c.checkpoint = p.is_absolute() ? p : base_dir / p;
    });
    b.integer("scenario.max_iterations", [&](long long v) { c.max_iterations = static_cast<std::uint64_t>(v); }, 1);
    b.integer("scenario.min_block_errors", [&](long long v) { c.min_block_errors = static_cast<std::uint64_t>(v); });
    b.integer("scenario.seed", [&](long long v) { c.seed = static_cast<std::uint64_t>(v); });
    b.boolean("scenario.perfect_csi", [&](bool v) { c.perfect_csi = v; });
    b.integer("scenario.ldpc_iterations", [&](long long v) { c.ldpc_iterations = static_cast<int>(v); }, 1);
}

std::set<std::string> all_known_keys() {
    TrainConfig t;
    ScenarioConfig s;
    ConfigDoc empty;
    Binder b(empty);
    bind_train(b, t);
    bind_scenario(b, s, {});
    return b.known();
}

// Errors from validate() name the field but not the file.
template <class C>
void validate_in(const C& c, const ConfigDoc& doc) {
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(doc.source + ": " + e.what());
    }
}

}  // namespace

ConfigDoc parse_config(const std::string& text, const std::string& source) {
    ConfigDoc doc;
    doc.source = source;
    std::istringstream is(text);
    std::string raw, section;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!valid_key(section)) throw ConfigError(where + ": invalid section name '" + section + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (doc.entries.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
        doc.entries[full] = {parse_value(line.substr(eq + 1), where + ": " + full), line_no};
    }
    return doc;
}

ConfigDoc load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, path.string());
}

TrainConfig train_config_from(const ConfigDoc& doc) {
    TrainConfig c;
    Binder b(doc);
    bind_train(b, c);
    b.reject_unknown(all_known_keys());
    validate_in(c, doc);
    return c;
}

ScenarioConfig scenario_config_from(const ConfigDoc& doc) {
    ScenarioConfig c;
    Binder b(doc);
    bind_scenario(b, c, std::filesystem::path(doc.source).parent_path());
    b.reject_unknown(all_known_keys());
    validate_in(c, doc);
    return c;
}

nlohmann::json to_json(const TrainConfig& c) {
    nlohmann::json j{{"batch_size", c.batch_size},
                     {"eb_n0_grid_db", c.eb_n0_grid_db},
                     {"l2", c.l2},
                     {"early_stop_patience_cycles", c.early_stop_patience_cycles},
                     {"channel_profile", c.channel_profile},
                     {"ue_speed_kmh", c.ue_speed_kmh},
                     {"data_mod_order", c.data_mod_order},
                     {"seed", c.seed},
                     {"carrier_hz", c.carrier_hz},
                     {"delay_spread_s", c.delay_spread_s},
                     {"code_rate", c.code_rate},
                     {"flip", std::string(to_string(c.flip))},
                     {"max_epochs", c.max_epochs},
                     {"steps_per_epoch", c.steps_per_epoch},
                     {"validation_size", c.validation_size},
                     {"bn_momentum", c.bn_momentum},
                     {"freeze_dataset", c.freeze_dataset},
                     {"lr_schedule",
                      {{"max_lr", c.lr_schedule.max_lr},
                       {"min_lr", c.lr_schedule.min_lr},
                       {"warmup_epochs", c.lr_schedule.warmup_epochs},
                       {"annealing_period_epochs", c.lr_schedule.annealing_period_epochs}}}};
    if (c.constant_lr) j["constant_lr"] = *c.constant_lr;
    return j;
}

nlohmann::json to_json(const ScenarioConfig& c) {
    nlohmann::json j{{"eb_n0_db", c.eb_n0_db},
                     {"data_mod_order", c.data_mod_order},
                     {"code_rate", c.code_rate},
                     {"channel_profile", c.channel_profile},
                     {"ue_speed_kmh", c.ue_speed_kmh},
                     {"carrier_hz", c.carrier_hz},
                     {"delay_spread_s", c.delay_spread_s},
                     {"max_iterations", c.max_iterations},
                     {"min_block_errors", c.min_block_errors},
                     {"seed", c.seed},
                     {"perfect_csi", c.perfect_csi},
                     {"ldpc_iterations", c.ldpc_iterations}};
    if (c.checkpoint) j["checkpoint"] = c.checkpoint->generic_string();
    return j;
}

std::vector<double> parse_number_list(const std::string& text) {
    const std::string t = trim(text);
    std::vector<double> out;
    if (t.find(':') != std::string::npos) {
        std::stringstream ss(t);
        std::string a, b, s;
        double lo = 0, hi = 0, step = 0;
        if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, s) || !parse_number(a, lo) ||
            !parse_number(b, hi) || !parse_number(s, step))
            throw ConfigError("range '" + t + "' must look like start:stop:step");
        if (!(step > 0.0) || hi < lo) throw ConfigError("range '" + t + "' needs step > 0 and stop >= start");
        const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        if (n > 100000) throw ConfigError("range '" + t + "' has too many points");
        for (std::size_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * step);
        return out;
    }
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double d = 0.0;
        if (!parse_number(item, d)) throw ConfigError("'" + trim(item) + "' is not a number");
        out.push_back(d);
    }
    if (out.empty()) throw ConfigError("empty value list");
    return out;
}

}  // namespace ntnpred

#include "wps/config.hpp"

#include "wps/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace wps::config {

namespace {

using Json = nlohmann::ordered_json;

std::string trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::uint64_t parse_count(const std::string& text, const std::string& key)
{
    const double v = io::parse_double(text, key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1.8e19) {
        throw std::invalid_argument(key + " must be a non-negative integer, got '" + text + "'");
    }
    // Exact for every integer text std::stoull accepts.
    return std::stoull(trim(text));
}

bool parse_bool(const std::string& text, const std::string& key)
{
    if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
    if (text == "false" || text == "no" || text == "off" || text == "0") return false;
    throw std::invalid_argument(key + " must be true or false, got '" + text + "'");
}

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
    return out;
}

} // namespace

LossKind parse_loss(const std::string& name)
{
    if (name == "nll" || name == "neg_log_likelihood" || name == "loglik") return LossKind::NegLogLikelihood;
    if (name == "squared" || name == "squared_error" || name == "nnls") return LossKind::SquaredError;
    throw std::invalid_argument("unknown loss '" + name + "' (expected nll or squared)");
}

std::string loss_name(LossKind kind) { return kind == LossKind::NegLogLikelihood ? "nll" : "squared"; }

std::vector<std::string> expand_learners(const std::vector<std::string>& names)
{
    std::vector<std::string> out;
    for (const auto& n : names) {
        if (n == "full" || n == "default") {
            for (const auto& s : default_library()) out.push_back(s.label);
        } else if (n == "reduced") {
            for (const auto& s : reduced_library()) out.push_back(s.label);
        } else {
            out.push_back(n);
        }
    }
    return out;
}

std::vector<LearnerSpec> ExperimentConfig::library() const
{
    if (learners.empty()) throw std::invalid_argument("library: no learners selected");
    std::set<std::string> seen;
    std::vector<LearnerSpec> out;
    for (const auto& name : learners) {
        if (!seen.insert(name).second) throw std::invalid_argument("library: learner '" + name + "' listed twice");
        LearnerSpec base = parse_learner(name);
        auto hp = base.hyperparameters;
        if (const auto it = overrides.find(name); it != overrides.end()) {
            for (const auto& [k, v] : it->second) {
                if (!hp.count(k)) {
                    throw std::invalid_argument("library: learner '" + name + "' has no hyperparameter '" + k + "'");
                }
                hp[k] = v;
            }
        }
        out.push_back(LearnerSpec::make(base.kind, hp, 0, name));
    }
    for (const auto& [name, _] : overrides) {
        if (!seen.count(name)) {
            throw std::invalid_argument("library: overrides given for '" + name + "', which is not in the library");
        }
    }
    return out;
}

eval::ExperimentGrid ExperimentConfig::grid() const
{
    eval::ExperimentGrid g;
    g.n_values = n_values;
    g.c_values = c_values;
    g.variants = variants;
    g.replications = replications;
    g.base_seed = seed;
    g.library = library();
    g.folds = folds;
    g.loss = loss;
    g.w = w;
    g.mode = evaluation_mode;
    g.jobs = jobs;
    return g;
}

ExperimentConfig profile(const std::string& name)
{
    ExperimentConfig c;
    c.profile = name;
    if (name == "desk") return c;
    if (name == "paper") {
        c.replications = 500;
        c.n_values = {200, 500, 1000};
        c.c_values = {1.0, 2.0};
        return c;
    }
    throw std::invalid_argument("unknown profile '" + name + "' (expected desk or paper)");
}

void set_option(ExperimentConfig& cfg, const std::string& section, const std::string& key, const std::string& raw)
{
    const std::string value = trim(raw);
    const std::string where = section + "." + key;
    if (section == "experiment") {
        if (key == "profile") {
            ExperimentConfig p = profile(value);
            cfg.profile = p.profile;
            cfg.n_values = p.n_values;
            cfg.c_values = p.c_values;
            cfg.replications = p.replications;
        } else if (key == "n") {
            cfg.n_values.clear();
            for (const auto& s : split_list(value)) {
                const auto n = parse_count(s, where);
                if (n < 1) throw std::invalid_argument(where + ": exposed counts must be >= 1");
                cfg.n_values.push_back(static_cast<std::size_t>(n));
            }
            if (cfg.n_values.empty()) throw std::invalid_argument(where + ": empty list");
        } else if (key == "C") {
            cfg.c_values.clear();
            for (const auto& s : split_list(value)) {
                const double c = io::parse_double(s, where);
                if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument(where + ": C must be positive");
                cfg.c_values.push_back(c);
            }
            if (cfg.c_values.empty()) throw std::invalid_argument(where + ": empty list");
        } else if (key == "variants") {
            cfg.variants.clear();
            for (const auto& s : split_list(value)) {
                if (s == "all") {
                    cfg.variants = eval::all_variants();
                } else {
                    cfg.variants.push_back(eval::parse_variant(s));
                }
            }
            if (cfg.variants.empty()) throw std::invalid_argument(where + ": empty list");
        } else if (key == "replications") {
            cfg.replications = parse_count(value, where);
            if (cfg.replications < 1) throw std::invalid_argument(where + " must be >= 1");
        } else if (key == "seed") {
            cfg.seed = parse_count(value, where);
        } else if (key == "folds") {
            cfg.folds = parse_count(value, where);
            if (cfg.folds < 2) throw std::invalid_argument(where + " must be >= 2");
        } else if (key == "loss") {
            cfg.loss.kind = parse_loss(value);
        } else if (key == "clip_epsilon") {
            cfg.loss.clip_epsilon = io::parse_double(value, where);
            cfg.loss.validate();
        } else if (key == "evaluation_mode") {
            cfg.evaluation_mode = eval::parse_evaluation_mode(value);
        } else if (key == "jobs") {
            cfg.jobs = parse_count(value, where);
        } else {
            throw std::invalid_argument("unknown key '" + key + "' in section [experiment]");
        }
    } else if (section == "weights") {
        if (key == "w") {
            cfg.w.w = io::parse_double(value, where);
            if (!(cfg.w.w > 0.0 && cfg.w.w < 1.0)) throw std::invalid_argument(where + " must lie in (0, 1)");
        } else if (key == "w_error") {
            cfg.w.relative_error = io::parse_double(value, where);
            if (!(cfg.w.relative_error >= 0.0 && cfg.w.relative_error < 1.0)) {
                throw std::invalid_argument(where + " must lie in [0, 1)");
            }
        } else if (key == "round_digits") {
            const double d = io::parse_double(value, where);
            if (d != std::floor(d) || d < -1 || d > 15) throw std::invalid_argument(where + " must be an integer in [-1, 15]");
            cfg.w.round_digits = static_cast<int>(d);
        } else if (key == "normalize") {
            cfg.w.normalize = parse_bool(value, where);
        } else {
            throw std::invalid_argument("unknown key '" + key + "' in section [weights]");
        }
    } else if (section == "library") {
        if (key == "learners") {
            cfg.learners = expand_learners(split_list(value));
        } else if (const auto dot = key.find('.'); dot != std::string::npos && dot > 0 && dot + 1 < key.size()) {
            const std::string learner = key.substr(0, dot), param = key.substr(dot + 1);
            const double v = io::parse_double(value, where);
            // Name, hyperparameter and range are checked here so the error
            // carries the line; membership in the library is checked later.
            LearnerSpec::make(parse_learner(learner).kind, {{param, v}});
            cfg.overrides[learner][param] = v;
        } else {
            throw std::invalid_argument("unknown key '" + key +
                                        "' in section [library] (expected learners or <learner>.<hyperparameter>)");
        }
    } else if (section == "output") {
        if (key == "dir") {
            if (value.empty()) throw std::invalid_argument(where + " must not be empty");
            cfg.out_dir = value;
        } else {
            throw std::invalid_argument("unknown key '" + key + "' in section [output]");
        }
    } else {
        throw std::invalid_argument("unknown section [" + section + "]");
    }
}

namespace {

struct Entry {
    std::string section, key, value;
    std::size_t line;
};

ExperimentConfig apply_entries(const std::vector<Entry>& entries, const ExperimentConfig& base)
{
    ExperimentConfig cfg = base;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& e : entries) {
        if (!seen.insert({e.section, e.key}).second) {
            throw io::InputError("line " + std::to_string(e.line) + ": duplicate key '" + e.key + "'", e.line);
        }
    }
    auto run = [&](bool profiles) {
        for (const auto& e : entries) {
            if ((e.section == "experiment" && e.key == "profile") != profiles) continue;
            try {
                set_option(cfg, e.section, e.key, e.value);
            } catch (const io::InputError&) {
                throw;
            } catch (const std::exception& ex) {
                throw io::InputError("line " + std::to_string(e.line) + ": " + ex.what(), e.line);
            }
        }
    };
    run(true);
    run(false);
    try {
        (void)cfg.library();
    } catch (const std::exception& ex) {
        throw io::InputError(ex.what());
    }
    return cfg;
}

std::string json_scalar(const Json& v, const std::string& where)
{
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return io::format_double(v.get<double>());
    throw io::InputError(where + ": expected a string, number or boolean");
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const ExperimentConfig& base)
{
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw io::InputError("line " + std::to_string(line_no) + ": malformed section header", line_no);
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            if (section != "experiment" && section != "weights" && section != "library" && section != "output") {
                throw io::InputError("line " + std::to_string(line_no) + ": unknown section [" + section + "]", line_no);
            }
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw io::InputError("line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
        }
        if (section.empty()) {
            throw io::InputError("line " + std::to_string(line_no) + ": key outside of any [section]", line_no);
        }
        entries.push_back({section, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)),
                           line_no});
    }
    return apply_entries(entries, base);
}

ExperimentConfig parse_config_json(const std::string& text, const ExperimentConfig& base)
{
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw io::InputError(std::string("invalid JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("config")) doc = doc["config"];
    if (!doc.is_object()) throw io::InputError("JSON config must be an object of sections");
    std::vector<Entry> entries;
    for (const auto& [section, body] : doc.items()) {
        if (!body.is_object()) throw io::InputError("section '" + section + "' must be an object");
        for (const auto& [key, value] : body.items()) {
            const std::string where = section + "." + key;
            std::string v;
            if (value.is_array()) {
                std::vector<std::string> parts;
                for (const auto& item : value) parts.push_back(json_scalar(item, where));
                v = join(parts);
            } else {
                v = json_scalar(value, where);
            }
            entries.push_back({section, key, v, 0});
        }
    }
    return apply_entries(entries, base);
}

ExperimentConfig load_config_file(const std::string& path, const ExperimentConfig& base)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io::InputError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    try {
        if (first != std::string::npos && text[first] == '{') return parse_config_json(text, base);
        return parse_config_text(text, base);
    } catch (const io::InputError& e) {
        throw io::InputError(path + ": " + e.what(), e.line());
    }
}

std::string config_to_json(const ExperimentConfig& cfg, int indent)
{
    Json j;
    Json& ex = j["experiment"];
    ex["profile"] = cfg.profile;
    ex["n"] = cfg.n_values;
    ex["C"] = cfg.c_values;
    Json variants = Json::array();
    for (auto v : cfg.variants) variants.push_back(std::string(eval::variant_name(v)));
    ex["variants"] = variants;
    ex["replications"] = cfg.replications;
    ex["seed"] = cfg.seed;
    ex["folds"] = cfg.folds;
    ex["loss"] = loss_name(cfg.loss.kind);
    ex["clip_epsilon"] = cfg.loss.clip_epsilon;
    ex["evaluation_mode"] = std::string(eval::evaluation_mode_name(cfg.evaluation_mode));
    ex["jobs"] = cfg.jobs;
    Json& w = j["weights"];
    w["w"] = cfg.w.w;
    w["w_error"] = cfg.w.relative_error;
    w["round_digits"] = cfg.w.round_digits;
    w["normalize"] = cfg.w.normalize;
    Json& lib = j["library"];
    lib["learners"] = cfg.learners;
    for (const auto& [name, hp] : cfg.overrides) {
        for (const auto& [k, v] : hp) lib[name + "." + k] = v;
    }
    j["output"]["dir"] = cfg.out_dir;
    return j.dump(indent);
}

} // namespace wps::config

#include "gtml/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "gtml/errors.hpp"

namespace gtml {

namespace {

using json = nlohmann::json;

/// Object reader that records which keys were consumed so leftovers can be
/// reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError(name(key) + ": missing");
        return j_.at(key);
    }

    template <class T>
    T get(const std::string& key) {
        return convert<T>(raw(key), name(key));
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        return has(key) ? get<T>(key) : fallback;
    }

    Section child(const std::string& key) { return Section(raw(key), name(key)); }

    std::string name(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const std::string& path_name() const noexcept { return path_; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.contains(it.key())) throw ConfigError(name(it.key()) + ": unknown key");
        }
    }

    template <class T>
    static T convert(const json& v, const std::string& where) {
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where + ": wrong type");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

std::vector<std::size_t> positive_list(Section& s, const std::string& key,
                                       std::vector<std::size_t> fallback) {
    auto v = s.get<std::vector<std::size_t>>(key, std::move(fallback));
    require(!v.empty(), s.name(key) + ": must not be empty");
    for (auto x : v) require(x > 0, s.name(key) + ": values must be positive");
    return v;
}

std::vector<double> positive_reals(Section& s, const std::string& key, std::vector<double> fallback) {
    auto v = s.get<std::vector<double>>(key, std::move(fallback));
    require(!v.empty(), s.name(key) + ": must not be empty");
    for (auto x : v) require(x > 0.0, s.name(key) + ": values must be positive");
    return v;
}

void parse_auction(Section s, gsp::AuctionSpec& a) {
    a.advertisers = s.get<std::size_t>("advertisers", a.advertisers);
    require(a.advertisers >= 1, s.name("advertisers") + ": must be at least 1");
    a.bid_levels = s.get<std::vector<double>>("bid_levels");
    require(!a.bid_levels.empty(), s.name("bid_levels") + ": must not be empty");
    for (double b : a.bid_levels) require(b >= 0.0, s.name("bid_levels") + ": must be non-negative");
    const json& qs = s.raw("queries");
    require(qs.is_array() && !qs.empty(), s.name("queries") + ": expected a non-empty array");
    a.queries.clear();
    for (std::size_t i = 0; i < qs.size(); ++i) {
        Section q(qs[i], s.name("queries") + "[" + std::to_string(i) + "]");
        QuerySpec spec;
        spec.label = q.get<std::string>("label");
        spec.prob = q.get<double>("prob");
        const auto clicks = q.get<std::vector<double>>("click_probs");
        require(clicks.size() == kSlots, q.name("click_probs") + ": expected 2 values");
        spec.click_probs = {clicks[0], clicks[1]};
        q.finish();
        a.queries.push_back(std::move(spec));
    }
    a.reserve_grid = s.get<std::vector<double>>("reserve_grid");
    require(!a.reserve_grid.empty(), s.name("reserve_grid") + ": must not be empty");
    s.finish();
}

void parse_true_model(Section s, TrueModelConfig& m) {
    const auto family = s.get<std::string>("family", "dirichlet");
    if (family == "dirichlet") {
        m.family = TrueModelFamily::dirichlet;
    } else if (family == "parametric") {
        m.family = TrueModelFamily::parametric;
    } else {
        throw ConfigError(s.name("family") + ": expected 'dirichlet' or 'parametric'");
    }
    m.seed = s.get<std::uint64_t>("seed", m.seed);
    m.floor = s.get<double>("floor", m.floor);
    m.concentration = s.get<double>("concentration", m.concentration);
    m.signal_independent = s.get<bool>("signal_independent", m.signal_independent);
    m.weights = s.get<std::vector<double>>("weights", m.weights);
    require(m.floor >= 0.0, s.name("floor") + ": must be non-negative");
    require(m.concentration > 0.0, s.name("concentration") + ": must be positive");
    if (m.family == TrueModelFamily::parametric) {
        require(!m.weights.empty(), s.name("weights") + ": required for the parametric family");
    }
    s.finish();
}

void parse_simulation(Section s, SimulationConfig& c) {
    c.length = s.get<std::size_t>("length", c.length);
    require(c.length >= 1, s.name("length") + ": must be positive");
    const auto init = s.get<std::string>("init", "stationary");
    if (init == "stationary") {
        c.init = InitMode::stationary;
    } else if (init == "fixed") {
        c.init = InitMode::fixed;
    } else if (init == "burn_in") {
        c.init = InitMode::burn_in;
    } else {
        throw ConfigError(s.name("init") + ": expected 'stationary', 'fixed' or 'burn_in'");
    }
    c.initial = s.get<std::string>("initial", c.initial);
    c.burn_in_factor = s.get<double>("burn_in_factor", c.burn_in_factor);
    require(c.burn_in_factor >= 0.0, s.name("burn_in_factor") + ": must be non-negative");
    c.certificate_max_n = s.get<std::size_t>("certificate_max_n", c.certificate_max_n);
    require(c.certificate_max_n >= 1, s.name("certificate_max_n") + ": must be positive");
    s.finish();
}

void parse_behavior_learning(Section s, BehaviorLearningConfig& c) {
    const auto method = s.get<std::string>("method", "nonparametric");
    if (method == "nonparametric") {
        c.method = BehaviorMethod::nonparametric;
    } else if (method == "parametric") {
        c.method = BehaviorMethod::parametric;
    } else {
        throw ConfigError(s.name("method") + ": expected 'parametric' or 'nonparametric'");
    }
    c.T1 = positive_list(s, "T1", c.T1);
    for (auto t : c.T1) require(t >= 2, s.name("T1") + ": values must be at least 2");
    c.epsilon = s.get<double>("epsilon", c.epsilon);
    require(c.epsilon > 0.0, s.name("epsilon") + ": must be positive");
    if (s.has("features")) {
        Section f = s.child("features");
        c.features.behavior = f.get<bool>("behavior", c.features.behavior);
        c.features.signal = f.get<bool>("signal", c.features.signal);
        c.features.bias = f.get<bool>("bias", c.features.bias);
        f.finish();
    }
    c.mle.bound = s.get<double>("W", c.mle.bound);
    c.mle.restarts = s.get<std::size_t>("restarts", c.mle.restarts);
    c.mle.tolerance = s.get<double>("tolerance", c.mle.tolerance);
    c.mle.max_iters = s.get<std::size_t>("max_iters", c.mle.max_iters);
    require(c.mle.bound >= 0.0, s.name("W") + ": must be non-negative");
    require(c.mle.restarts >= 1, s.name("restarts") + ": must be positive");
    require(c.mle.tolerance > 0.0, s.name("tolerance") + ": must be positive");
    s.finish();
}

void parse_mechanism_learning(Section s, MechanismLearningConfig& c) {
    c.T2 = positive_list(s, "T2", c.T2);
    c.delta = s.get<double>("delta", c.delta);
    require(c.delta >= 0.0, s.name("delta") + ": must be non-negative");
    const auto rule = s.get<std::string>("rule", "distance");
    if (rule == "distance") {
        c.rule = SharingRule::distance;
    } else if (rule == "total_variation") {
        c.rule = SharingRule::total_variation;
    } else {
        throw ConfigError(s.name("rule") + ": expected 'distance' or 'total_variation'");
    }
    s.finish();
}

void parse_ablation(Section s, AblationConfig& c) {
    if (s.has("click_probs")) {
        const auto v = s.get<std::vector<double>>("click_probs");
        require(v.size() == kSlots, s.name("click_probs") + ": expected 2 values");
        c.click_probs = {v[0], v[1]};
    }
    c.grid_sizes = positive_list(s, "grid_sizes", c.grid_sizes);
    c.T2 = s.get<std::size_t>("T2", c.T2);
    require(c.T2 >= 1, s.name("T2") + ": must be positive");
    c.replications = s.get<std::size_t>("replications", c.replications);
    require(c.replications >= 1, s.name("replications") + ": must be positive");
    s.finish();
}

void parse_end_to_end(Section s, EndToEndConfig& c) {
    if (s.has("sweep")) {
        const json& sw = s.raw("sweep");
        require(sw.is_array() && !sw.empty(), s.name("sweep") + ": expected a non-empty array");
        c.sweep.clear();
        for (const auto& item : sw) {
            const auto pair = Section::convert<std::vector<std::size_t>>(item, s.name("sweep"));
            require(pair.size() == 2 && pair[0] >= 2 && pair[1] >= 1,
                    s.name("sweep") + ": entries are [T1 >= 2, T2 >= 1]");
            c.sweep.emplace_back(pair[0], pair[1]);
        }
    }
    s.finish();
}

void parse_bounds(Section s, BoundsConfig& c) {
    c.beta0 = s.get<double>("beta0", c.beta0);
    c.gamma = s.get<double>("gamma", c.gamma);
    c.s = s.get<double>("s", c.s);
    if (s.has("alpha")) c.alpha = s.get<double>("alpha");
    c.C1 = s.get<double>("C1", c.C1);
    c.C2 = s.get<double>("C2", c.C2);
    if (s.has("C_stability")) c.stability = s.get<double>("C_stability");
    c.stability_magnitude = s.get<double>("stability_magnitude", c.stability_magnitude);
    c.n_perturbations = s.get<std::size_t>("n_perturbations", c.n_perturbations);
    c.pdim = s.get<std::size_t>("pdim", c.pdim);
    c.behavior_share = s.get<double>("behavior_share", c.behavior_share);
    c.epsilon = s.get<double>("epsilon", c.epsilon);
    c.T1 = positive_reals(s, "T1", c.T1);
    c.T2 = positive_reals(s, "T2", c.T2);
    c.tail_replications = s.get<std::size_t>("tail_replications", c.tail_replications);
    for (double v : {c.beta0, c.gamma, c.s, c.C1, c.C2}) {
        require(v >= 0.0, s.path_name() + ": mixing constants must be non-negative");
    }
    require(c.s > 0.0 && c.s < c.gamma, s.name("s") + ": must lie in (0, gamma)");
    require(c.stability_magnitude > 0.0, s.name("stability_magnitude") + ": must be positive");
    require(c.pdim >= 1, s.name("pdim") + ": must be positive");
    require(c.behavior_share > 0.0 && c.behavior_share < 1.0,
            s.name("behavior_share") + ": must lie in (0, 1)");
    require(c.epsilon > 0.0, s.name("epsilon") + ": must be positive");
    s.finish();
}

std::vector<std::vector<double>> embedding_table(Section& s, const std::string& key) {
    return s.get<std::vector<std::vector<double>>>(key, {});
}

}  // namespace

Config parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    Section root(j, "");
    Config c;
    if (!root.has("schema_version")) throw ConfigError("schema_version: missing");
    c.schema_version = root.get<int>("schema_version");
    if (c.schema_version != kSchemaVersion) {
        throw ConfigError("schema_version: unsupported version " + std::to_string(c.schema_version));
    }
    c.seed = root.get<std::uint64_t>("seed", c.seed);
    c.replications = root.get<std::size_t>("replications", c.replications);
    require(c.replications >= 1, "replications: must be positive");
    parse_auction(root.child("auction"), c.auction);
    if (root.has("embeddings")) {
        Section e = root.child("embeddings");
        c.behavior_embeddings = embedding_table(e, "behaviors");
        c.signal_embeddings = embedding_table(e, "signals");
        e.finish();
    }
    if (root.has("true_model")) parse_true_model(root.child("true_model"), c.true_model);
    c.data_mechanism.params = root.get<std::vector<double>>("data_mechanism");
    if (root.has("simulation")) parse_simulation(root.child("simulation"), c.simulation);
    if (root.has("behavior_learning")) {
        parse_behavior_learning(root.child("behavior_learning"), c.behavior_learning);
    }
    if (root.has("mechanism_learning")) {
        parse_mechanism_learning(root.child("mechanism_learning"), c.mechanism_learning);
    }
    if (root.has("ablation")) parse_ablation(root.child("ablation"), c.ablation);
    if (root.has("end_to_end")) parse_end_to_end(root.child("end_to_end"), c.end_to_end);
    if (root.has("bounds")) parse_bounds(root.child("bounds"), c.bounds);
    root.finish();
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace gtml

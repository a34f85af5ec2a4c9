#include "scmbench/soi.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace scmbench {

namespace {

Interval parse_interval(const nlohmann::json& v, const std::string& field) {
    Interval out;
    if (v.is_number_integer()) {
        out.lo = out.hi = v.get<long>();
    } else if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer()) {
        out.lo = v[0].get<long>();
        out.hi = v[1].get<long>();
    } else {
        throw ValidationError(field + ": expected an integer or [lo, hi]");
    }
    if (out.lo > out.hi) throw ValidationError(field + ": lo > hi");
    return out;
}

SymbolicExpr parse_expr_field(const nlohmann::json& v, const std::string& field) {
    std::string text;
    if (v.is_string())
        text = v.get<std::string>();
    else if (v.is_number())
        text = v.dump();
    else
        throw ValidationError(field + ": expected an expression string or number");
    try {
        return SymbolicExpr::parse(text);
    } catch (const SyntaxError& e) {
        throw ValidationError(field + ": " + e.what());
    }
}

template <typename Enum>
Enum parse_enum(const nlohmann::json& v, const std::string& field,
                const std::vector<std::pair<std::string, Enum>>& table) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        for (const auto& [name, val] : table)
            if (s == name) return val;
    }
    std::string opts;
    for (const auto& [name, val] : table) opts += (opts.empty() ? "" : "|") + name;
    throw ValidationError(field + ": expected one of " + opts);
}

NoiseSpec parse_noise(const nlohmann::json& v) {
    NoiseSpec out;
    nlohmann::json kind = v;
    nlohmann::json args = nlohmann::json::array();
    if (v.is_object()) {
        for (auto& [k, _] : v.items())
            if (k != "kind" && k != "args")
                throw ValidationError("noise_distribution: unknown key '" + k + "'");
        if (!v.contains("kind")) throw ValidationError("noise_distribution: missing 'kind'");
        kind = v["kind"];
        args = v.value("args", nlohmann::json::array());
    }
    out.kind = parse_enum<NoiseSpec::Kind>(kind, "noise_distribution.kind",
                                           {{"uniform", NoiseSpec::Kind::Uniform},
                                            {"normal", NoiseSpec::Kind::Normal}});
    if (!args.empty()) {
        if (!args.is_array() || args.size() != 2 || !args[0].is_number() || !args[1].is_number())
            throw ValidationError("noise_distribution.args: expected [a, b]");
        out.a = args[0].get<double>();
        out.b = args[1].get<double>();
    } else if (out.kind == NoiseSpec::Kind::Normal) {
        out.a = 0.0;
        out.b = 1.0;
    }
    if (out.kind == NoiseSpec::Kind::Uniform && !(out.a < out.b))
        throw ValidationError("noise_distribution: uniform requires lo < hi");
    if (out.kind == NoiseSpec::Kind::Normal && !(out.b > 0))
        throw ValidationError("noise_distribution: normal requires std > 0");
    return out;
}

void check_query_spec(const nlohmann::json& q, size_t idx) {
    const std::string where = "specific_queries[" + std::to_string(idx) + "]";
    if (!q.is_object()) throw ValidationError(where + ": expected an object");
    static const std::vector<std::string> known = {"kind", "T", "Y", "t", "c",
                                                   "X",    "x", "V_F", "v_F", "y"};
    for (auto& [k, _] : q.items())
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ValidationError(where + ": unknown key '" + k + "'");
    for (const char* req : {"kind", "T", "Y", "t", "c"})
        if (!q.contains(req)) throw ValidationError(where + ": missing '" + std::string(req) + "'");
    const std::string kind = q["kind"].get<std::string>();
    if (kind != "ate" && kind != "cate" && kind != "ctf_te")
        throw ValidationError(where + ".kind: expected ate|cate|ctf_te");
    if (kind == "cate" && (!q.contains("X") || !q.contains("x")))
        throw ValidationError(where + ": cate requires X and x");
    if (kind == "ctf_te" && (!q.contains("V_F") || !q.contains("v_F")))
        throw ValidationError(where + ": ctf_te requires V_F and v_F");
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

long SpaceOfInterest::resolved_support_samples(int n_nodes) const {
    // Caps the support matrix to ~2e7 cells so wide SCMs stay in memory.
    constexpr long kCellCap = 20000000;
    long rows = support_samples > 0 ? support_samples
                                    : std::max<long>(100000, 100 * num_samples);
    long cap = std::max<long>(1000, kCellCap / std::max(1, n_nodes));
    return std::min(rows, cap);
}

SpaceOfInterest parse_soi(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(std::string("SoI document: ") + e.what());
    }
    return parse_soi_json(doc);
}

SpaceOfInterest parse_soi_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SyntaxError("SoI document: expected a JSON object");

    static const std::vector<std::string> known = {
        "num_nodes",        "variable_dim",     "expected_edges",    "hidden_proportion",
        "markovian",        "semi_markovian",   "predefined_graph",  "mechanism_family",
        "mechanism_args",   "variable_type",    "cardinality",       "discrete_sampling",
        "noise_mode",       "noise_distribution", "noise_regions",   "query_type",
        "queries_per_scm",  "specific_queries", "allow_nan_queries", "disable_queries",
        "ctf_te_probability_form", "kernel",    "num_samples",       "estimation_samples",
        "query_retry_cap",  "table_budget",     "support_samples"};
    for (auto& [k, _] : doc.items())
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ValidationError("unknown key '" + k + "'");

    SpaceOfInterest soi;
    soi.noise_regions = SymbolicExpr::parse("N");

    if (doc.contains("num_nodes")) soi.num_nodes = parse_interval(doc["num_nodes"], "num_nodes");
    if (doc.contains("variable_dim"))
        soi.variable_dim = parse_interval(doc["variable_dim"], "variable_dim");
    if (!doc.contains("expected_edges"))
        throw ValidationError("expected_edges: required field is missing");
    soi.expected_edges = parse_expr_field(doc["expected_edges"], "expected_edges");
    if (doc.contains("hidden_proportion")) soi.hidden_proportion = doc["hidden_proportion"].get<double>();
    if (doc.contains("markovian")) soi.markovian = doc["markovian"].get<bool>();
    if (doc.contains("semi_markovian")) soi.semi_markovian = doc["semi_markovian"].get<bool>();
    if (doc.contains("predefined_graph")) {
        try {
            soi.predefined_graph = graph_from_json(doc["predefined_graph"]);
        } catch (const Error& e) {
            throw ValidationError(std::string("predefined_graph: ") + e.what());
        }
    }
    if (doc.contains("mechanism_family"))
        soi.mechanism_family = parse_enum<MechanismFamily>(
            doc["mechanism_family"], "mechanism_family",
            {{"linear", MechanismFamily::Linear},
             {"neural", MechanismFamily::Neural},
             {"tabular", MechanismFamily::Tabular}});
    if (doc.contains("mechanism_args")) {
        if (!doc["mechanism_args"].is_object())
            throw ValidationError("mechanism_args: expected an object");
        soi.mechanism_args = doc["mechanism_args"];
    }
    if (doc.contains("variable_type"))
        soi.variable_type = parse_enum<VariableType>(doc["variable_type"], "variable_type",
                                                     {{"continuous", VariableType::Continuous},
                                                      {"discrete", VariableType::Discrete}});
    if (doc.contains("cardinality")) soi.cardinality = parse_interval(doc["cardinality"], "cardinality");
    if (doc.contains("discrete_sampling"))
        soi.discrete_sampling = parse_enum<DiscreteSampling>(
            doc["discrete_sampling"], "discrete_sampling",
            {{"sample_rejection", DiscreteSampling::SampleRejection},
             {"exhaustive", DiscreteSampling::Exhaustive},
             {"unbiased_random", DiscreteSampling::UnbiasedRandom}});
    if (doc.contains("noise_mode"))
        soi.noise_mode = parse_enum<NoiseMode>(doc["noise_mode"], "noise_mode",
                                               {{"additive", NoiseMode::Additive},
                                                {"multiplicative", NoiseMode::Multiplicative}});
    if (doc.contains("noise_distribution")) soi.noise_distribution = parse_noise(doc["noise_distribution"]);
    if (doc.contains("noise_regions"))
        soi.noise_regions = parse_expr_field(doc["noise_regions"], "noise_regions");
    if (doc.contains("query_type"))
        soi.query_type = parse_enum<QueryKind>(doc["query_type"], "query_type",
                                               {{"ate", QueryKind::Ate},
                                                {"cate", QueryKind::Cate},
                                                {"ctf_te", QueryKind::CtfTe}});
    if (doc.contains("queries_per_scm")) soi.queries_per_scm = doc["queries_per_scm"].get<long>();
    if (doc.contains("specific_queries")) {
        if (!doc["specific_queries"].is_array())
            throw ValidationError("specific_queries: expected an array");
        soi.specific_queries = doc["specific_queries"];
        for (size_t i = 0; i < soi.specific_queries.size(); ++i)
            check_query_spec(soi.specific_queries[i], i);
    }
    if (doc.contains("allow_nan_queries")) soi.allow_nan_queries = doc["allow_nan_queries"].get<bool>();
    if (doc.contains("disable_queries")) soi.disable_queries = doc["disable_queries"].get<bool>();
    if (doc.contains("ctf_te_probability_form"))
        soi.ctf_te_probability_form = doc["ctf_te_probability_form"].get<bool>();
    if (doc.contains("kernel")) {
        const auto& k = doc["kernel"];
        if (!k.is_object()) throw ValidationError("kernel: expected an object");
        for (auto& [key, _] : k.items())
            if (key != "kind" && key != "bandwidth")
                throw ValidationError("kernel: unknown key '" + key + "'");
        if (k.contains("kind"))
            soi.kernel = parse_enum<KernelKind>(k["kind"], "kernel.kind",
                                                {{"gaussian", KernelKind::Gaussian},
                                                 {"epsilon", KernelKind::Epsilon}});
        if (k.contains("bandwidth")) soi.bandwidth = k["bandwidth"].get<double>();
    }
    if (doc.contains("num_samples")) soi.num_samples = doc["num_samples"].get<long>();
    if (doc.contains("estimation_samples")) soi.estimation_samples = doc["estimation_samples"].get<long>();
    if (doc.contains("query_retry_cap")) soi.query_retry_cap = doc["query_retry_cap"].get<long>();
    if (doc.contains("table_budget")) soi.table_budget = doc["table_budget"].get<long>();
    if (doc.contains("support_samples")) soi.support_samples = doc["support_samples"].get<long>();

    // Invariants.
    if (soi.num_nodes.lo < 1) throw ValidationError("num_nodes: N_min must be >= 1");
    if (!(soi.variable_dim == Interval{1, 1}))
        throw ValidationError("variable_dim: only [1, 1] is supported");
    if (soi.hidden_proportion < 0.0 || soi.hidden_proportion > 1.0)
        throw ValidationError("hidden_proportion: must be in [0, 1]");
    if (soi.markovian == soi.semi_markovian)
        throw ConflictError("markovian and semi_markovian are mutually exclusive flags");
    if (soi.cardinality.lo < 2) throw ValidationError("cardinality: must be >= 2");
    if (!(soi.bandwidth > 0)) throw ValidationError("kernel.bandwidth: must be > 0");
    if (soi.queries_per_scm < 1) throw ValidationError("queries_per_scm: must be >= 1");
    if (soi.num_samples < 1) throw ValidationError("num_samples: must be >= 1");
    if (soi.estimation_samples < 1) throw ValidationError("estimation_samples: must be >= 1");
    if (soi.query_retry_cap < 1) throw ValidationError("query_retry_cap: must be >= 1");
    if (soi.table_budget < 1) throw ValidationError("table_budget: must be >= 1");

    const bool discrete = soi.variable_type == VariableType::Discrete;
    const bool tabular = soi.mechanism_family == MechanismFamily::Tabular;
    if (discrete != tabular)
        throw ValidationError(
            discrete ? "variable_type=discrete requires mechanism_family=tabular"
                     : "mechanism_family=tabular requires variable_type=discrete");
    if (tabular && !soi.noise_distribution.bounded())
        throw ValidationError(
            "noise_distribution: tabular mechanisms need a bounded noise support (uniform)");

    if (!discrete) {
        std::vector<std::string> ignored;
        for (const char* f : {"cardinality", "noise_regions", "discrete_sampling"})
            if (doc.contains(f)) ignored.push_back(f);
        if (!ignored.empty()) {
            std::string msg = "continuous variables ignore:";
            for (const auto& f : ignored) msg += " " + f;
            soi.warnings.push_back(msg);
        }
    } else if (doc.contains("noise_mode")) {
        soi.warnings.push_back("noise_mode is ignored for tabular mechanisms");
    }

    // Catch expression problems eagerly at the interval endpoints.
    for (long n : {soi.num_nodes.lo, soi.num_nodes.hi}) {
        double e;
        try {
            e = soi.expected_edges.eval(static_cast<double>(n), static_cast<double>(soi.cardinality.lo));
        } catch (const DomainError& err) {
            throw ValidationError(std::string("expected_edges: ") + err.what());
        }
        if (e < 0) throw ValidationError("expected_edges: negative at N=" + std::to_string(n));
        if (discrete) {
            long r;
            try {
                r = soi.noise_regions.eval_int(static_cast<double>(n),
                                               static_cast<double>(soi.cardinality.lo));
            } catch (const DomainError& err) {
                throw ValidationError(std::string("noise_regions: ") + err.what());
            }
            if (r < 1) throw ValidationError("noise_regions: must floor to >= 1");
        }
    }

    if (soi.predefined_graph) {
        if (soi.predefined_graph->n < soi.num_nodes.lo || soi.predefined_graph->n > soi.num_nodes.hi)
            soi.warnings.push_back("predefined_graph sets the node count; num_nodes is ignored");
    }
    return soi;
}

nlohmann::json SpaceOfInterest::to_json() const {
    nlohmann::json j;
    j["num_nodes"] = {num_nodes.lo, num_nodes.hi};
    j["variable_dim"] = {variable_dim.lo, variable_dim.hi};
    j["expected_edges"] = expected_edges.text();
    j["hidden_proportion"] = hidden_proportion;
    j["markovian"] = markovian;
    j["semi_markovian"] = semi_markovian;
    if (predefined_graph) j["predefined_graph"] = graph_to_json(*predefined_graph);
    j["mechanism_family"] = to_string(mechanism_family);
    if (!mechanism_args.empty()) j["mechanism_args"] = mechanism_args;
    j["variable_type"] = to_string(variable_type);
    j["cardinality"] = {cardinality.lo, cardinality.hi};
    j["discrete_sampling"] = to_string(discrete_sampling);
    j["noise_mode"] = to_string(noise_mode);
    j["noise_distribution"] = {{"kind", noise_distribution.kind == NoiseSpec::Kind::Uniform
                                            ? "uniform"
                                            : "normal"},
                               {"args", {noise_distribution.a, noise_distribution.b}}};
    j["noise_regions"] = noise_regions.text();
    j["query_type"] = to_string(query_type);
    j["queries_per_scm"] = queries_per_scm;
    if (!specific_queries.empty()) j["specific_queries"] = specific_queries;
    j["allow_nan_queries"] = allow_nan_queries;
    j["disable_queries"] = disable_queries;
    if (ctf_te_probability_form) j["ctf_te_probability_form"] = true;
    j["kernel"] = {{"kind", to_string(kernel)}, {"bandwidth", bandwidth}};
    j["num_samples"] = num_samples;
    j["estimation_samples"] = estimation_samples;
    j["query_retry_cap"] = query_retry_cap;
    j["table_budget"] = table_budget;
    if (support_samples > 0) j["support_samples"] = support_samples;
    return j;
}

std::string SpaceOfInterest::canonical_text() const { return to_json().dump(); }

std::string SpaceOfInterest::hash() const {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx",
             static_cast<unsigned long long>(fnv1a64(canonical_text())));
    return buf;
}

void apply_override(nlohmann::json& doc, const std::string& key_value) {
    auto eq = key_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw SyntaxError("--set expects key=value, got '" + key_value + "'");
    std::string key = key_value.substr(0, eq);
    std::string raw = key_value.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
        value = raw;  // bare strings (e.g. expressions) pass through
    }
    nlohmann::json* cur = &doc;
    size_t start = 0;
    for (;;) {
        size_t dot = key.find('.', start);
        std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw SyntaxError("--set: empty key segment in '" + key + "'");
        if (dot == std::string::npos) {
            (*cur)[part] = value;
            break;
        }
        cur = &(*cur)[part];
        start = dot + 1;
    }
}

SpaceOfInterest load_soi_file(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open SoI file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(std::string("SoI document: ") + e.what());
    }
    for (const auto& ov : overrides) apply_override(doc, ov);
    return parse_soi_json(doc);
}

}  // namespace scmbench

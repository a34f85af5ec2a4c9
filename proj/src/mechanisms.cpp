#include "scmbench/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

namespace scmbench {

long RegionalMechanism::n_configs() const {
    long n = 1;
    for (int c : parent_cards) n *= c;
    return n;
}

long RegionalMechanism::region_of(double u) const {
    if (u < boundaries.front() || u > boundaries.back())
        throw DomainError("tabular mechanism: noise value outside its support");
    auto it = std::upper_bound(boundaries.begin(), boundaries.end(), u);
    long r = static_cast<long>(it - boundaries.begin()) - 1;
    return std::min(r, regions() - 1);  // closes the last interval at sup
}

long RegionalMechanism::config_index(const double* pa) const {
    long idx = 0, stride = 1;
    for (size_t k = 0; k < parent_cards.size(); ++k) {
        long v = static_cast<long>(pa[k]);
        if (v < 0 || v >= parent_cards[k])
            throw DomainError("tabular mechanism: parent value outside its domain");
        idx += v * stride;
        stride *= parent_cards[k];
    }
    return idx;
}

double RegionalMechanism::eval(const double* pa, double u) const {
    return static_cast<double>(mappings[region_of(u)][config_index(pa)]);
}

int Mechanism::arity() const {
    switch (family) {
        case MechanismFamily::Tabular: return static_cast<int>(tabular.parent_cards.size());
        case MechanismFamily::Linear: return static_cast<int>(linear.weights.size());
        case MechanismFamily::Neural:
            return neural.weights.empty() ? 0 : static_cast<int>(neural.weights.front().cols());
    }
    return 0;
}

namespace {

Eigen::VectorXd neural_forward(const NeuralMechanism& nn, const Eigen::MatrixXd& pa) {
    Eigen::MatrixXd h = pa;
    for (size_t l = 0; l < nn.weights.size(); ++l) {
        h = (h * nn.weights[l].transpose()).rowwise() + nn.biases[l].transpose();
        if (l + 1 < nn.weights.size()) h = h.cwiseMax(0.0);
    }
    return h.col(0);
}

Eigen::VectorXd apply_noise(NoiseMode mode, Eigen::VectorXd base, const Eigen::VectorXd& u) {
    if (mode == NoiseMode::Additive) return base + u;
    return base.cwiseProduct(u);
}

}  // namespace

Eigen::VectorXd Mechanism::eval(const Eigen::MatrixXd& pa, const Eigen::VectorXd& u) const {
    if (pa.cols() != arity()) throw DomainError("mechanism: parent arity mismatch");
    if (pa.rows() != u.size()) throw DomainError("mechanism: sample count mismatch");
    const long n = u.size();
    switch (family) {
        case MechanismFamily::Tabular: {
            Eigen::VectorXd out(n);
            std::vector<double> row(static_cast<size_t>(pa.cols()));
            for (long i = 0; i < n; ++i) {
                for (long k = 0; k < pa.cols(); ++k) row[static_cast<size_t>(k)] = pa(i, k);
                out(i) = tabular.eval(row.data(), u(i));
            }
            return out;
        }
        case MechanismFamily::Linear: {
            // Column accumulation keeps this bit-identical to evaluation
            // paths that skip the parent gather.
            Eigen::VectorXd base = Eigen::VectorXd::Zero(n);
            for (long k = 0; k < pa.cols(); ++k) base += linear.weights(k) * pa.col(k);
            return apply_noise(noise_mode, std::move(base), u);
        }
        case MechanismFamily::Neural:
            return apply_noise(noise_mode, neural_forward(neural, pa), u);
    }
    throw DomainError("mechanism: unknown family");
}

double Mechanism::eval1(const double* pa, double u) const {
    const int k = arity();
    Eigen::MatrixXd pam(1, k);
    for (int i = 0; i < k; ++i) pam(0, i) = pa[i];
    Eigen::VectorXd uv(1);
    uv(0) = u;
    return eval(pam, uv)(0);
}

long pow_capped(long base, long exp, long cap) {
    long r = 1;
    for (long i = 0; i < exp; ++i) {
        if (r > cap / base) return cap + 1;
        r *= base;
    }
    return r;
}

namespace {

long checked_configs(const std::vector<int>& parent_cards, int child_card, long budget) {
    if (child_card < 2) throw ParamError("regional mechanism: cardinality must be >= 2");
    long n = 1;
    for (int c : parent_cards) {
        if (c < 2) throw ParamError("regional mechanism: parent cardinality must be >= 2");
        if (n > budget / c)
            throw BudgetError("regional mechanism: parent configuration space exceeds table budget");
        n *= c;
    }
    return n;
}

std::vector<double> random_boundaries(long regions, const NoiseSpec& omega, RngStream& rng) {
    std::vector<double> b;
    b.reserve(static_cast<size_t>(regions) + 1);
    b.push_back(omega.a);
    for (long i = 0; i < regions - 1; ++i) b.push_back(rng.uniform(omega.a, omega.b));
    b.push_back(omega.b);
    std::sort(b.begin(), b.end());
    return b;
}

void check_entry_budget(long regions, long n_cfg, long budget) {
    if (regions > budget / n_cfg)
        throw BudgetError("regional mechanism: " + std::to_string(regions) + " regions x " +
                          std::to_string(n_cfg) + " configurations exceeds the table budget");
}

std::vector<uint16_t> random_mapping(long n_cfg, int child_card, RngStream& rng) {
    std::vector<uint16_t> m(static_cast<size_t>(n_cfg));
    for (auto& e : m) e = static_cast<uint16_t>(rng.uniform_int(child_card));
    return m;
}

}  // namespace

RegionalMechanism sample_regional_rejection(const std::vector<int>& parent_cards, int child_card,
                                            long regions, const NoiseSpec& omega_u, RngStream& rng,
                                            long table_budget) {
    if (regions < 1) throw ParamError("regional mechanism: region count must be >= 1");
    if (!omega_u.bounded()) throw ParamError("regional mechanism: noise support must be bounded");
    const long n_cfg = checked_configs(parent_cards, child_card, table_budget);
    const long max_mappings = pow_capped(child_card, n_cfg, table_budget);
    const long r_eff = std::min(regions, max_mappings);
    check_entry_budget(r_eff, n_cfg, table_budget);

    RegionalMechanism m;
    m.child_card = child_card;
    m.parent_cards = parent_cards;
    m.boundaries = random_boundaries(r_eff, omega_u, rng);
    std::set<std::vector<uint16_t>> used;
    for (long r = 0; r < r_eff; ++r) {
        std::vector<uint16_t> map;
        do {
            map = random_mapping(n_cfg, child_card, rng);
        } while (used.count(map));
        used.insert(map);
        m.mappings.push_back(std::move(map));
    }
    return m;
}

RegionalMechanism sample_regional_exhaustive(const std::vector<int>& parent_cards, int child_card,
                                             const NoiseSpec& omega_u, RngStream& rng,
                                             long table_budget) {
    if (!omega_u.bounded()) throw ParamError("regional mechanism: noise support must be bounded");
    const long n_cfg = checked_configs(parent_cards, child_card, table_budget);
    const long total = pow_capped(child_card, n_cfg, table_budget);
    if (total > table_budget)
        throw BudgetError("regional mechanism: exhaustive enumeration exceeds the table budget");
    check_entry_budget(total, n_cfg, table_budget);

    RegionalMechanism m;
    m.child_card = child_card;
    m.parent_cards = parent_cards;
    m.boundaries = random_boundaries(total, omega_u, rng);
    m.mappings.reserve(static_cast<size_t>(total));
    for (long idx = 0; idx < total; ++idx) {
        std::vector<uint16_t> map(static_cast<size_t>(n_cfg));
        long rest = idx;
        for (long k = 0; k < n_cfg; ++k) {
            map[static_cast<size_t>(k)] = static_cast<uint16_t>(rest % child_card);
            rest /= child_card;
        }
        m.mappings.push_back(std::move(map));
    }
    // Region-to-mapping assignment carries no preferred order.
    rng.shuffle(m.mappings);
    return m;
}

RegionalMechanism sample_regional_unbiased(const std::vector<int>& parent_cards, int child_card,
                                           long regions, const NoiseSpec& omega_u, RngStream& rng,
                                           long table_budget) {
    if (regions < 1) throw ParamError("regional mechanism: region count must be >= 1");
    if (!omega_u.bounded()) throw ParamError("regional mechanism: noise support must be bounded");
    const long n_cfg = checked_configs(parent_cards, child_card, table_budget);
    check_entry_budget(regions, n_cfg, table_budget);

    RegionalMechanism m;
    m.child_card = child_card;
    m.parent_cards = parent_cards;
    m.boundaries = random_boundaries(regions, omega_u, rng);
    for (long r = 0; r < regions; ++r) m.mappings.push_back(random_mapping(n_cfg, child_card, rng));
    return m;
}

Mechanism sample_continuous_mechanism(MechanismFamily family, int n_parents,
                                      const nlohmann::json& args, NoiseMode mode, RngStream& rng) {
    Mechanism m;
    m.family = family;
    m.noise_mode = mode;
    if (family == MechanismFamily::Linear) {
        m.linear.weights.resize(n_parents);
        for (int i = 0; i < n_parents; ++i) m.linear.weights(i) = rng.uniform(-1.0, 1.0);
        return m;
    }
    if (family != MechanismFamily::Neural)
        throw ParamError("sample_continuous_mechanism: family must be linear or neural");

    std::vector<int> widths = {8, 8};
    if (args.is_object() && args.contains("hidden_layers")) {
        widths.clear();
        for (const auto& w : args["hidden_layers"]) {
            int v = w.get<int>();
            if (v < 1) throw ParamError("mechanism_args.hidden_layers: widths must be >= 1");
            widths.push_back(v);
        }
    }
    std::vector<int> dims;
    dims.push_back(n_parents);
    dims.insert(dims.end(), widths.begin(), widths.end());
    dims.push_back(1);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        Eigen::MatrixXd w(dims[l + 1], dims[l]);
        for (long r = 0; r < w.rows(); ++r)
            for (long c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-1.0, 1.0);
        Eigen::VectorXd b(dims[l + 1]);
        for (long r = 0; r < b.size(); ++r) b(r) = rng.uniform(-1.0, 1.0);
        m.neural.weights.push_back(std::move(w));
        m.neural.biases.push_back(std::move(b));
    }
    return m;
}

Eigen::VectorXd sample_noise(const NoiseSpec& spec, long n, RngStream& rng) {
    if (n < 0) throw ParamError("sample_noise: n must be >= 0");
    Eigen::VectorXd u(n);
    if (spec.kind == NoiseSpec::Kind::Uniform) {
        for (long i = 0; i < n; ++i) u(i) = rng.uniform(spec.a, spec.b);
    } else {
        for (long i = 0; i < n; ++i) u(i) = rng.normal(spec.a, spec.b);
    }
    return u;
}

nlohmann::json mechanism_to_json(const Mechanism& m) {
    nlohmann::json j;
    j["family"] = to_string(m.family);
    j["noise_mode"] = to_string(m.noise_mode);
    switch (m.family) {
        case MechanismFamily::Tabular: {
            nlohmann::json t;
            t["child_card"] = m.tabular.child_card;
            t["parent_cards"] = m.tabular.parent_cards;
            auto bs = nlohmann::json::array();
            for (double b : m.tabular.boundaries) bs.push_back(hex_double(b));
            t["boundaries"] = bs;
            auto ms = nlohmann::json::array();
            for (const auto& map : m.tabular.mappings) ms.push_back(map);
            t["mappings"] = ms;
            j["tabular"] = t;
            break;
        }
        case MechanismFamily::Linear: {
            auto ws = nlohmann::json::array();
            for (long i = 0; i < m.linear.weights.size(); ++i)
                ws.push_back(hex_double(m.linear.weights(i)));
            j["linear"] = {{"weights", ws}};
            break;
        }
        case MechanismFamily::Neural: {
            auto layers = nlohmann::json::array();
            for (size_t l = 0; l < m.neural.weights.size(); ++l) {
                nlohmann::json layer;
                auto w = nlohmann::json::array();
                for (long r = 0; r < m.neural.weights[l].rows(); ++r) {
                    auto row = nlohmann::json::array();
                    for (long c = 0; c < m.neural.weights[l].cols(); ++c)
                        row.push_back(hex_double(m.neural.weights[l](r, c)));
                    w.push_back(row);
                }
                auto b = nlohmann::json::array();
                for (long r = 0; r < m.neural.biases[l].size(); ++r)
                    b.push_back(hex_double(m.neural.biases[l](r)));
                layer["w"] = w;
                layer["b"] = b;
                layers.push_back(layer);
            }
            j["neural"] = {{"layers", layers}};
            break;
        }
    }
    return j;
}

Mechanism mechanism_from_json(const nlohmann::json& j) {
    Mechanism m;
    const std::string fam = j.at("family").get<std::string>();
    const std::string mode = j.at("noise_mode").get<std::string>();
    m.noise_mode = mode == "additive" ? NoiseMode::Additive : NoiseMode::Multiplicative;
    if (fam == "tabular") {
        m.family = MechanismFamily::Tabular;
        const auto& t = j.at("tabular");
        m.tabular.child_card = t.at("child_card").get<int>();
        m.tabular.parent_cards = t.at("parent_cards").get<std::vector<int>>();
        for (const auto& b : t.at("boundaries"))
            m.tabular.boundaries.push_back(parse_hex_double(b.get<std::string>()));
        for (const auto& map : t.at("mappings"))
            m.tabular.mappings.push_back(map.get<std::vector<uint16_t>>());
    } else if (fam == "linear") {
        m.family = MechanismFamily::Linear;
        const auto& ws = j.at("linear").at("weights");
        m.linear.weights.resize(static_cast<long>(ws.size()));
        for (size_t i = 0; i < ws.size(); ++i)
            m.linear.weights(static_cast<long>(i)) = parse_hex_double(ws[i].get<std::string>());
    } else if (fam == "neural") {
        m.family = MechanismFamily::Neural;
        for (const auto& layer : j.at("neural").at("layers")) {
            const auto& w = layer.at("w");
            const auto& b = layer.at("b");
            long rows = static_cast<long>(w.size());
            long cols = rows > 0 ? static_cast<long>(w[0].size()) : 0;
            Eigen::MatrixXd wm(rows, cols);
            for (long r = 0; r < rows; ++r)
                for (long c = 0; c < cols; ++c)
                    wm(r, c) = parse_hex_double(w[static_cast<size_t>(r)][static_cast<size_t>(c)]
                                                    .get<std::string>());
            Eigen::VectorXd bv(static_cast<long>(b.size()));
            for (long r = 0; r < bv.size(); ++r)
                bv(r) = parse_hex_double(b[static_cast<size_t>(r)].get<std::string>());
            m.neural.weights.push_back(std::move(wm));
            m.neural.biases.push_back(std::move(bv));
        }
    } else {
        throw SyntaxError("mechanism: unknown family '" + fam + "'");
    }
    return m;
}

}  // namespace scmbench

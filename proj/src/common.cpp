#include "scmbench/common.hpp"

#include <cstdio>
#include <cstdlib>

namespace scmbench {

std::string hex_double(double v) {
    char buf[48];
    snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double parse_hex_double(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw SyntaxError("malformed float literal: " + s);
    return v;
}

std::string to_string(MechanismFamily f) {
    switch (f) {
        case MechanismFamily::Linear: return "linear";
        case MechanismFamily::Neural: return "neural";
        case MechanismFamily::Tabular: return "tabular";
    }
    return "?";
}

std::string to_string(VariableType t) {
    return t == VariableType::Continuous ? "continuous" : "discrete";
}

std::string to_string(DiscreteSampling s) {
    switch (s) {
        case DiscreteSampling::SampleRejection: return "sample_rejection";
        case DiscreteSampling::Exhaustive: return "exhaustive";
        case DiscreteSampling::UnbiasedRandom: return "unbiased_random";
    }
    return "?";
}

std::string to_string(NoiseMode m) {
    return m == NoiseMode::Additive ? "additive" : "multiplicative";
}

std::string to_string(KernelKind k) {
    return k == KernelKind::Gaussian ? "gaussian" : "epsilon";
}

std::string to_string(QueryKind q) {
    switch (q) {
        case QueryKind::Ate: return "ate";
        case QueryKind::Cate: return "cate";
        case QueryKind::CtfTe: return "ctf_te";
    }
    return "?";
}

}  // namespace scmbench

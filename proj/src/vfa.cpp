#include "nrm/vfa.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nrm/errors.hpp"

namespace nrm {

double AffineBaseline::eval(int t, std::span<const int> x) const {
    if (t > horizon()) return 0.0;
    double v = theta[t - 1];
    const auto& w = W[t - 1];
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * x[i];
    return v;
}

double AffineBaseline::drop(int t, std::span<const int> a) const {
    if (t > horizon()) return 0.0;
    double v = 0.0;
    const auto& w = W[t - 1];
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * a[i];
    return v;
}

double eval_basis(const RidgeBasis& b, std::span<const int> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < b.beta.size(); ++i) s += b.beta[i] * x[i];
    return std::exp(-s);
}

double weighted_l1(std::span<const double> beta, std::span<const int> capacities) {
    double n = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) n += capacities[i] * std::abs(beta[i]);
    return n;
}

RidgeBasis project_norm(std::span<const double> beta, std::span<const int> capacities) {
    if (beta.size() != capacities.size()) throw InvalidArgument("project_norm: dimension mismatch");
    const double n = weighted_l1(beta, capacities);
    if (!(n > 0.0) || !std::isfinite(n))
        throw DegenerateDirection("project_norm: direction has zero weighted norm");
    RidgeBasis b;
    b.beta.reserve(beta.size());
    for (double v : beta) b.beta.push_back(v / n);
    // Division can land one ulp above the surface; nudge it back inside so
    // that |beta . x| <= 1 holds in floating point too.
    while (weighted_l1(b.beta, capacities) > 1.0)
        for (double& v : b.beta) v *= 1.0 - 0x1.0p-52;
    return b;
}

Approximation Approximation::zero(int horizon) {
    Approximation a;
    a.xi.assign(static_cast<std::size_t>(horizon), 0.0);
    a.V.assign(static_cast<std::size_t>(horizon), {});
    return a;
}

double eval_approx(const Approximation& a, int t, std::span<const int> x) {
    if (t > a.horizon()) return 0.0;
    double v = a.psi(t, x) + a.xi[t - 1];
    const auto& row = a.V[t - 1];
    for (int k = 0; k < a.num_bases(); ++k)
        if (row[k] != 0.0) v -= row[k] * eval_basis(a.bases[k], x);
    return v;
}

double continuation_delta(const Approximation& a, const Instance& inst, int t, std::span<const int> x, int j) {
    if (t >= a.horizon()) return 0.0;
    const auto col = inst.column(j);
    double d = a.baseline ? -a.baseline->drop(t + 1, col) : 0.0;
    const auto& row = a.V[t];
    for (int k = 0; k < a.num_bases(); ++k) {
        if (row[k] == 0.0) continue;
        const auto& beta = a.bases[k].beta;
        double bx = 0.0, ba = 0.0;
        for (int i : inst.legs_of(j)) ba += beta[i];
        for (std::size_t i = 0; i < beta.size(); ++i) bx += beta[i] * x[i];
        // phi(x - a_j) - phi(x) = phi(x) (e^{beta.a_j} - 1)
        d -= row[k] * std::exp(-bx) * std::expm1(ba);
    }
    return d;
}

bool decide(const Approximation& a, const Instance& inst, int t, std::span<const int> x, int j) {
    if (!can_serve(inst, x, j)) return false;
    return inst.fare(j) + continuation_delta(a, inst, t, x, j) >= 0.0;
}

namespace {

using nlohmann::json;

}  // namespace

std::string approximation_to_json(const Approximation& a) {
    json doc;
    doc["xi"] = a.xi;
    doc["V"] = a.V;
    json betas = json::array();
    for (const auto& b : a.bases) betas.push_back(b.beta);
    doc["betas"] = betas;
    if (a.baseline) {
        doc["baseline"] = {{"type", "affine"}, {"theta", a.baseline->theta}, {"W", a.baseline->W}};
    } else {
        doc["baseline"] = {{"type", "zero"}};
    }
    return doc.dump(2) + "\n";
}

Approximation approximation_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("approximation: malformed JSON: ") + e.what());
    }
    Approximation a;
    try {
        a.xi = doc.at("xi").get<std::vector<double>>();
        a.V = doc.at("V").get<std::vector<std::vector<double>>>();
        for (auto& b : doc.at("betas")) a.bases.push_back({b.get<std::vector<double>>()});
        // A missing baseline means the zero baseline.
        const json base = doc.value("baseline", json{{"type", "zero"}});
        if (base.at("type").get<std::string>() == "affine") {
            AffineBaseline ab;
            ab.theta = base.at("theta").get<std::vector<double>>();
            ab.W = base.at("W").get<std::vector<std::vector<double>>>();
            a.baseline = std::move(ab);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("approximation: ") + e.what());
    }
    if (a.V.size() != a.xi.size()) throw ValidationError("approximation: V must have one row per period");
    for (const auto& row : a.V)
        if (row.size() != a.bases.size()) throw ValidationError("approximation: V rows must have K entries");
    if (a.baseline && (a.baseline->theta.size() != a.xi.size() || a.baseline->W.size() != a.xi.size()))
        throw ValidationError("approximation: baseline must cover the horizon");
    return a;
}

void save_approximation(const Approximation& a, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("approximation: cannot write " + path.string());
    out << approximation_to_json(a);
}

Approximation load_approximation(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("approximation: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return approximation_from_json(buf.str());
}

}  // namespace nrm

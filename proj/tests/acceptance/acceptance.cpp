// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.
#include <algorithm>
#include <array>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "qvar/approximation.hpp"
#include "qvar/catalog.hpp"
#include "qvar/frequency.hpp"
#include "qvar/variations.hpp"

using namespace qvar;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& id, const std::string& title, const std::function<Verdict()>& check) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("threw: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::printf("[%s] %s %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id.c_str(), title.c_str(),
              v.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

QField catalog_field(const std::string& id, double h, const nlohmann::json& p = nlohmann::json::object(),
                     double half = 1.0) {
  const auto e = make_catalog(id, p);
  return sample(e.map, Grid::centered_box(e.map.m, half, h));
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < k; ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= k;
  my /= k;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

// ----------------------------------------------------------------- criteria

Verdict ac1() {
  const auto t0 = Clock::now();
  const auto e = make_catalog("branch_sqrt");
  const QField f = sample(e.map, Grid::centered_box(2, 1.0, 1.0 / 256));
  const auto p = frequency_profile(f, e.base_point, default_ladder(f, e.base_point, 12));
  const double dt = seconds_since(t0);
  double worst = 0.0;
  for (double I : p.I) worst = std::max(worst, std::abs(I - 1.5));
  return {p.I.size() == 12 && worst <= 0.02 && dt <= 10.0,
          fmt("max |I - 1.5| = %.3g over %zu radii (<= 0.02), %.2f s (<= 10)", worst, p.I.size(), dt)};
}

Verdict ac2() {
  const double h = 1.0 / 256;
  double worst = 0.0;
  std::string d;
  for (const std::string id : {"branch_sqrt", "cone_1d"}) {
    const auto e = make_catalog(id);
    const QField f = catalog_field(id, h);
    const double err = derivative_identity_check(frequency_profile(f, e.base_point, default_ladder(f, e.base_point, 12)));
    worst = std::max(worst, err);
    d += fmt("%s %.3g; ", id.c_str(), err);
  }
  return {worst <= 1e-2, d + "max <= 1e-2"};
}

Verdict ac3() {
  const double h = 1.0 / 256;
  double worst = INFINITY;
  std::string d;
  auto check = [&](const std::string& name, const QField& f, const std::vector<double>& x0) {
    const double inc = monotonicity_check(frequency_profile(f, x0, default_ladder(f, x0, 12)));
    worst = std::min(worst, inc);
    d += fmt("%s %.2g; ", name.c_str(), inc);
  };
  const std::vector<std::pair<std::string, nlohmann::json>> entries = {
      {"linear_pair", {}}, {"cone_1d", {}}, {"appendix_fa", {{"a", 0.0}}}, {"appendix_fa", {{"a", 1.0}}},
      {"branch_sqrt", {}}};
  for (const auto& [id, p] : entries) {
    const auto e = make_catalog(id, p);
    if (!e.props.dirichlet_classical) continue;
    check(id + (p.is_null() ? "" : p.dump()), sample(e.map, Grid::centered_box(e.map.m, 1.0, h)), e.base_point);
  }
  for (const std::string id : {"linear_pair", "cone_1d", "branch_sqrt"}) {
    const auto e = make_catalog(id);
    RelaxationConfig cfg;
    cfg.boundary = e.map;
    cfg.grid = Grid::centered_box(e.map.m, 1.0, h);
    cfg.region = Region::ball(std::vector<double>(e.map.m, 0.0), 0.9);
    check("relaxed " + id, dir_relax(cfg), e.base_point);
  }
  return {worst >= -1e-2, d + fmt("min %.3g >= -1e-2", worst)};
}

Verdict ac4() {
  const double h = 1.0 / 256;
  const QField g = catalog_field("appendix_g", h);
  double outer = 0.0;
  for (const auto& psi : canonical_family(TestField::Kind::Outer, 1, 1))
    outer = std::max(outer, std::abs(outer_variation_area(g, psi).value));
  const double inner = std::abs(inner_variation_area(g, inner_field({0.0}, 0.5, {1.0}, {0.0})).value);
  double fa = 0.0;
  for (double a : {0.0, 1.0}) {
    const QField f = catalog_field("appendix_fa", h, {{"a", a}});
    for (const auto& phi : canonical_family(TestField::Kind::Inner, 1, 1))
      fa = std::max(fa, std::abs(inner_variation_area(f, phi).value));
  }
  const bool ok = outer <= 5 * h && std::abs(inner - 1.0) <= 0.02 && fa <= 5 * h;
  return {ok, fmt("|outer(g)| %.3g (<= %.3g), |inner(g, phi0)| %.5f (1 +- 0.02), |inner(f_a)| %.3g (<= %.3g)",
                  outer, 5 * h, inner, fa, 5 * h)};
}

Verdict ac5() {
  const auto e = make_catalog("branch_sqrt");
  const auto sc = canonical_family(TestField::Kind::Scalar, 2, 2);
  const auto in = canonical_family(TestField::Kind::Inner, 2, 2);
  const auto out = canonical_family(TestField::Kind::Outer, 2, 2);
  TestFamilyOptions xo;
  xo.u_radius = 0.0;
  const auto avg = canonical_family(TestField::Kind::Outer, 2, 2, xo);
  const std::vector<double> hs = {1.0 / 64, 1.0 / 128, 1.0 / 256};
  std::vector<std::vector<double>> res(4);
  for (double h : hs) {
    const QField f = sample(e.map, Grid::centered_box(2, 1.0, h));
    std::array<double, 4> w{0, 0, 0, 0};
    for (std::size_t k = 0; k < sc.size(); ++k) {
      const auto r = dirichlet_variations(f, sc[k], in[k], out[k], avg[k]);
      w[0] = std::max(w[0], std::abs(r.O.value));
      w[1] = std::max(w[1], std::abs(r.I.value));
      w[2] = std::max(w[2], std::abs(r.S.value));
      w[3] = std::max(w[3], std::abs(r.avg.value));
    }
    for (int i = 0; i < 4; ++i) res[i].push_back(w[i]);
  }
  const char* names[4] = {"O", "I", "S", "avg"};
  bool ok = true;
  std::string d;
  for (int i = 0; i < 4; ++i) {
    const double top = *std::max_element(res[i].begin(), res[i].end());
    if (top <= 1e-12) {
      d += fmt("%s identically below 1e-12; ", names[i]);
      continue;
    }
    const double s = lsq_slope(hs, res[i]);
    ok = ok && s >= 0.9;
    d += fmt("%s slope %.2f; ", names[i], s);
  }
  return {ok, d + "each >= 0.9"};
}

Verdict ac6() {
  const auto fam = ball_family(std::vector<double>{0.0, 0.0}, 20, 0.2, 0.3);
  const double a = reverse_holder_check(catalog_field("branch_sqrt", 1.0 / 128), 1.25, fam);
  const double b = reverse_holder_check(catalog_field("branch_sqrt", 1.0 / 256), 1.25, fam);
  const double change = std::abs(b - a) / a;
  return {change <= 0.1, fmt("ratio %.4f at 1/128, %.4f at 1/256, change %.3g (<= 0.1)", a, b, change)};
}

Verdict ac7() {
  const double h = 1.0 / 128;
  const QField z = catalog_field("branch_sqrt", h);
  const QField lp = catalog_field("linear_pair", h);
  const std::vector<double> o = {0.0, 0.0};
  const auto kz = key_estimate_check(z, ball_family(o, 20, 0.05, 0.04), discrete_lipschitz(z));
  const auto kl = key_estimate_check(lp, ball_family(o, 20, 0.3, 0.05), discrete_lipschitz(lp));
  return {kz.worst_slack >= -1e-3 && kl.worst_slack >= -1e-3,
          fmt("branch_sqrt slack %.3g (M %.3g), linear_pair slack %.3g (M %.3g), each >= -1e-3", kz.worst_slack, kz.M,
              kl.worst_slack, kl.M)};
}

Verdict ac8() {
  const auto e = make_catalog("branch_sqrt");
  const std::vector<double> p = {0.0, 0.0, 0.0, 0.0};
  const double dens = density_estimate(e.map, p, {0.01, 0.01 * std::sqrt(2.0), 0.02});
  double worst = INFINITY, prev = -INFINITY;
  for (int k = 0; k <= 11; ++k) {
    const double m = mass_ratio(e.map, p, 0.01 * std::pow(2.0, k / 2.0));
    if (k > 0) worst = std::min(worst, m - prev);
    prev = m;
  }
  return {std::abs(dens - 2.0) <= 0.05 && worst >= -1e-6,
          fmt("density %.6f (2 +- 0.05), min mass-ratio increment %.3g (>= -1e-6)", dens, worst)};
}

// Shared perturbed_plane sweep for the truncation and harmonic criteria.
struct SweepPoint {
  double lambda;
  QField f;
  TruncationResult trunc;
};

const std::vector<SweepPoint>& sweep() {
  static std::vector<SweepPoint> pts;
  if (!pts.empty()) return pts;
  TruncationOptions to;
  to.r = 0.5;
  to.eps = 2.0;
  for (int k = 0; k < 8; ++k) {
    const double lam = 0.02 * std::pow(10.0, k / 7.0);
    const auto e = make_catalog("perturbed_plane", {{"lambda", lam}, {"kappa", 3.0}});
    QField f = sample(e.map, Grid::centered_box(2, 0.5, 1.0 / 256));
    to.x0 = e.base_point;
    auto tr = lipschitz_truncate(f, 0.02, to);
    pts.push_back({lam, std::move(f), std::move(tr)});
  }
  return pts;
}

Verdict ac9() {
  std::vector<double> E, bad, lip;
  bool same = true;
  std::size_t good = 0;
  std::vector<double> Eb;
  for (const auto& p : sweep()) {
    E.push_back(p.trunc.stats.E);
    lip.push_back(p.trunc.stats.lip);
    // Empty bad sets have no logarithm and are left out of the measure fit.
    if (p.trunc.stats.bad_measure > 0.0) {
      Eb.push_back(p.trunc.stats.E);
      bad.push_back(p.trunc.stats.bad_measure);
    }
    const std::size_t blk = static_cast<std::size_t>(p.f.q()) * p.f.n();
    for (std::size_t k = 0; k < p.f.size(); ++k)
      if (p.trunc.K[k]) {
        ++good;
        same = same && std::memcmp(p.f.at(k).data.data(), p.trunc.fhat.at(k).data.data(), blk * sizeof(double)) == 0;
      }
  }
  const double sb = bad.size() >= 3 ? lsq_slope(Eb, bad) : NAN, sl = lsq_slope(E, lip);
  const double target = 0.02 * 2;
  return {sb >= 1.0 && std::abs(sl - target) <= 0.2 && same && good > 0,
          fmt("|B\\K| slope %.3f over %zu nonempty bad sets (>= 1), Lip slope %.3f (within 0.2 of %.2f), "
              "f^ = f on %zu K nodes: %s",
              sb, bad.size(), sl, target, good, same ? "bit-exact" : "differs")};
}

Verdict ac10() {
  std::vector<std::array<double, 3>> ratios;
  for (const auto& p : sweep()) {
    const auto e = make_catalog("perturbed_plane", {{"lambda", p.lambda}, {"kappa", 3.0}});
    RelaxationConfig cfg;
    cfg.boundary = e.map;
    cfg.grid = p.f.grid();
    cfg.region = Region::ball({0.0, 0.0}, 0.5);
    cfg.tolerance = 1e-12 * p.lambda;
    cfg.nested = true;
    const QField u = dir_relax(cfg);
    const auto hc = harmonic_compare(p.f, u, std::vector<double>{0.0, 0.0}, 0.5);
    ratios.push_back({hc.ratio_l2, hc.ratio_grad, hc.ratio_avg});
  }
  const char* names[3] = {"l2", "grad", "avg"};
  bool ok = true;
  std::string d;
  for (int i = 0; i < 3; ++i) {
    const double factor = ratios.back()[i] / ratios.front()[i];
    bool mono = true;
    for (std::size_t k = 1; k < ratios.size(); ++k) mono = mono && ratios[k][i] >= ratios[k - 1][i];
    ok = ok && factor >= 2.0;
    d += fmt("%s %.3g -> %.3g (factor %.3g, %s); ", names[i], ratios.back()[i], ratios.front()[i], factor,
             mono ? "monotone" : "not monotone");
  }
  return {ok, d + "each factor >= 2 as lambda decreases"};
}

Verdict ac11() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SplitScheme s;
  s.centers = {{0.0, 0.0}, {6.0, 1.0}, {-2.0, 7.0}};
  s.multiplicities = {2, 1, 1};
  s.scale = 1.0;
  int bad = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const int q = 1 + trial % 5, n = 1 + trial % 3;
    QPoint a(q, n), b(q, n), c(q, n);
    for (QPoint* p : {&a, &b, &c})
      for (double& x : p->flat()) x = u(rng);
    if (g_dist(a, c) > g_dist(a, b) + g_dist(b, c) + 1e-12) ++bad;

    QPoint t = s.anchor();
    for (double& x : t.flat()) x += 0.5 * u(rng);
    if (g_dist(recovery_map(projection_map(t, s), s), t) > 1e-12) ++bad;
  }
  const double dt = seconds_since(t0);
  return {bad == 0 && dt <= 1.0, fmt("%d failures in 10000 checks, %.3f s (<= 1)", bad, dt)};
}

Verdict ac12() {
  const std::string cli = QVAR_CLI_PATH;
  for (const char* t : {"1", "8"}) {
    const std::string cmd = "QVAR_THREADS=" + std::string(t) + " " + cli + " report --seed 0 -o report_t" + t + ".json";
    if (std::system(cmd.c_str()) != 0) return {false, "report failed with QVAR_THREADS=" + std::string(t)};
  }
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp("report_t1.json"), b = slurp("report_t8.json");
  return {!a.empty() && a == b, fmt("%zu and %zu bytes, %s", a.size(), b.size(), a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  report("AC1", "frequency value", ac1);
  report("AC2", "derivative identity", ac2);
  report("AC3", "frequency monotonicity", ac3);
  report("AC4", "outer versus inner split", ac4);
  report("AC5", "classical residual convergence", ac5);
  report("AC6", "reverse Holder stability", ac6);
  report("AC7", "key estimate", ac7);
  report("AC8", "density and mass ratio", ac8);
  report("AC9", "truncation sweep", ac9);
  report("AC10", "harmonic approximation", ac10);
  report("AC11", "metric-space core", ac11);
  report("AC12", "determinism", ac12);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

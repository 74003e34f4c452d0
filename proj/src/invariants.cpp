#include "qvar/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numeric>
#include <random>

#include "qvar/approximation.hpp"
#include "qvar/catalog.hpp"
#include "qvar/frequency.hpp"
#include "qvar/io.hpp"
#include "qvar/parallel.hpp"
#include "qvar/variations.hpp"

namespace qvar {

namespace {

using Rng = std::mt19937_64;

InvariantRow row(std::string module, std::string name, bool pass, double value, double tol,
                 std::string note = {}) {
  InvariantRow r;
  r.module = std::move(module);
  r.name = std::move(name);
  r.pass = pass;
  r.value = value;
  r.tolerance = tol;
  r.note = std::move(note);
  return r;
}

InvariantRow skipped(std::string module, std::string name, std::string why) {
  InvariantRow r = row(std::move(module), std::move(name), true, 0.0, 0.0, "skipped: " + why);
  r.skipped = true;
  return r;
}

double uniform(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

QPoint random_point(Rng& rng, int q, int n, double scale) {
  std::vector<double> v(static_cast<std::size_t>(q) * n);
  for (double& x : v) x = uniform(rng, -scale, scale);
  // Occasional repeated values exercise the degenerate pairings.
  if (q > 1 && pick(rng, 0, 3) == 0)
    std::copy(v.begin(), v.begin() + n, v.begin() + n);
  return QPoint(q, n, std::move(v));
}

QPoint shuffled(const QPoint& t, Rng& rng) {
  std::vector<int> order(t.q());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> v;
  for (int l : order) v.insert(v.end(), t.value(l).begin(), t.value(l).end());
  return QPoint(t.q(), t.n(), std::move(v));
}

SplitScheme random_scheme(Rng& rng, int n) {
  SplitScheme s;
  const int N = pick(rng, 1, 3);
  s.scale = uniform(rng, 0.5, 1.5);
  for (int j = 0; j < N; ++j) {
    std::vector<double> c(n);
    for (int k = 0; k < n; ++k) c[k] = uniform(rng, -0.2, 0.2) * s.scale;
    c[0] += 5.0 * s.scale * j;
    s.centers.push_back(std::move(c));
    s.multiplicities.push_back(pick(rng, 1, 2));
  }
  return s;
}

// Anchor plus a perturbation of total size frac * radius.
QPoint near_anchor(const SplitScheme& s, Rng& rng, double radius, double frac) {
  QPoint p = s.anchor();
  std::vector<double> d(p.flat().size());
  double nrm = 0.0;
  for (double& x : d) {
    x = uniform(rng, -1.0, 1.0);
    nrm += x * x;
  }
  nrm = std::sqrt(nrm);
  const double len = frac * radius * uniform(rng, 0.0, 1.0);
  for (std::size_t i = 0; i < d.size(); ++i) p.flat()[i] += nrm > 0.0 ? d[i] / nrm * len : 0.0;
  return shuffled(p, rng);
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

QField catalog_field(const std::string& id, const nlohmann::json& params, double h) {
  const CatalogEntry e = make_catalog(id, params);
  return sample(e.map, Grid::centered_box(e.map.m, 1.0, h));
}

// Two well separated smooth branches, so every node is decomposable.
QMap separated_pair() {
  QMap f;
  f.m = 2;
  f.q = 2;
  f.n = 2;
  f.branch_consistent = true;
  f.eval = [](std::span<const double> x, std::span<double> v) {
    v[0] = std::sin(x[0]) + 0.5 * x[0] * x[1] + 3.0;
    v[1] = 0.3 * x[1] + 0.2 * x[0] * x[0];
    v[2] = x[0] * x[0] - x[1] - 3.0;
    v[3] = std::cos(x[1]) + 0.4 * x[0];
  };
  return f;
}

struct FamilyMax {
  double outer = 0.0, inner = 0.0, O = 0.0, I = 0.0, S = 0.0, avg = 0.0;
  double dirichlet() const { return std::max({O, I, S, avg}); }
};

FamilyMax residual_maxima(const QField& f) {
  const int m = f.m(), n = f.n();
  const auto sc = canonical_family(TestField::Kind::Scalar, m, n);
  const auto in = canonical_family(TestField::Kind::Inner, m, n);
  const auto out = canonical_family(TestField::Kind::Outer, m, n);
  TestFamilyOptions xo;
  xo.u_radius = 0.0;
  const auto outx = canonical_family(TestField::Kind::Outer, m, n, xo);
  FamilyMax r;
  for (std::size_t k = 0; k < sc.size(); ++k) {
    r.outer = std::max(r.outer, std::abs(outer_variation_area(f, out[k]).value));
    r.inner = std::max(r.inner, std::abs(inner_variation_area(f, in[k]).value));
    const auto d = dirichlet_variations(f, sc[k], in[k], out[k], outx[k]);
    r.O = std::max(r.O, std::abs(d.O.value));
    r.I = std::max(r.I, std::abs(d.I.value));
    r.S = std::max(r.S, std::abs(d.S.value));
    r.avg = std::max(r.avg, std::abs(d.avg.value));
  }
  return r;
}

std::vector<double> geometric(double a, double b, int k) {
  std::vector<double> r;
  for (int i = 0; i < k; ++i) r.push_back(a * std::pow(b / a, i / (k - 1.0)));
  return r;
}

// ---------------------------------------------------------------- aq_core

void aq_rows(const InvariantOptions& opt, std::vector<InvariantRow>& out) {
  Rng rng(opt.seed);
  double tri = 0.0, sym = 0.0, self = 0.0, inv = 0.0, eta_err = 0.0;
  for (int t = 0; t < opt.trials; ++t) {
    const int q = pick(rng, 1, 4), n = pick(rng, 1, 3);
    const QPoint a = random_point(rng, q, n, 1.0), b = random_point(rng, q, n, 1.0),
                 c = random_point(rng, q, n, 1.0);
    const double ab = g_dist(a, b), bc = g_dist(b, c), ac = g_dist(a, c);
    tri = std::max(tri, ac - ab - bc);
    sym = std::max(sym, std::abs(ab - g_dist(b, a)));
    self = std::max(self, g_dist(a, a));
    std::vector<double> v(n);
    for (double& x : v) x = uniform(rng, -3.0, 3.0);
    const QPoint as = ominus(shuffled(a, rng), v), bs = ominus(shuffled(b, rng), v);
    inv = std::max(inv, std::abs(g_dist(as, bs) - ab));
    const auto e0 = eta(a), e1 = eta(ominus(a, v));
    for (int k = 0; k < n; ++k)
      eta_err = std::max(eta_err, std::abs(e1[k] - (e0[k] - v[k])) / (1.0 + std::abs(v[k])));
  }
  out.push_back(row("aq_core", "triangle_inequality", tri <= 1e-12, tri, 1e-12));
  out.push_back(row("aq_core", "symmetry_and_identity", sym == 0.0 && self == 0.0,
                    std::max(sym, self), 0.0));
  out.push_back(row("aq_core", "permutation_translation_invariance", inv <= 1e-12, inv, 1e-12));
  out.push_back(row("aq_core", "eta_ominus", eta_err <= 1e-14, eta_err, 1e-14,
                    "rounding of the mean; relative to 1 + |v|"));

  int resum_fail = 0, left_fail = 0, right_fail = 0;
  double left_err = 0.0, right_err = 0.0, lip = 0.0;
  const int schemes = std::max(1, opt.trials / 20);
  for (int t = 0; t < schemes; ++t) {
    const int n = pick(rng, 1, 2);
    const SplitScheme s = random_scheme(rng, n);
    for (int k = 0; k < 20; ++k) {
      const QPoint T = near_anchor(s, rng, 2.0 * s.scale, 0.999);
      const auto parts = split_retraction(T, s);
      if (!concat(parts).same_multiset(T)) ++resum_fail;
      const QPoint back = recovery_map(projection_map(T, s), s);
      const double e = g_dist(back, T);
      left_err = std::max(left_err, e);
      if (e > 1e-12) ++left_fail;
      // S with pi_0(S) = sum Q_j [[j]] and |S| < s.
      std::vector<double> sv;
      double norm2 = 0.0;
      std::vector<double> w;
      for (std::size_t j = 0; j < s.centers.size(); ++j)
        for (int c = 0; c < s.multiplicities[j]; ++c)
          for (int i = 0; i < n; ++i) {
            w.push_back(uniform(rng, -1.0, 1.0));
            norm2 += w.back() * w.back();
          }
      const double shrink = 0.999 * s.scale * uniform(rng, 0.0, 1.0) / std::max(std::sqrt(norm2), 1e-300);
      std::size_t wi = 0;
      for (std::size_t j = 0; j < s.centers.size(); ++j)
        for (int c = 0; c < s.multiplicities[j]; ++c) {
          sv.push_back(static_cast<double>(j + 1));
          for (int i = 0; i < n; ++i) sv.push_back(w[wi++] * shrink);
        }
      const QPoint S = shuffled(QPoint(s.total(), n + 1, sv), rng);
      const double e2 = g_dist(projection_map(recovery_map(S, s), s), S);
      right_err = std::max(right_err, e2);
      if (e2 > 1e-12) ++right_fail;
    }
    lip = std::max(lip, retraction_lipschitz(s, 20, opt.seed + 7919u * t));
  }
  out.push_back(row("aq_core", "split_parts_resum", resum_fail == 0, resum_fail, 0.0,
                    "failures over random schemes inside the 2s ball"));
  out.push_back(row("aq_core", "recovery_left_inverse", left_fail == 0, left_err, 1e-12));
  out.push_back(row("aq_core", "projection_right_inverse", right_fail == 0, right_err, 1e-12));
  out.push_back(row("aq_core", "retraction_lipschitz", std::isfinite(lip), lip, 0.0,
                    "measured constant, reported"));
}

// ----------------------------------------------------------------- qfield

void qfield_rows(const InvariantOptions& opt, std::vector<InvariantRow>& out) {
  const double h = opt.h;
  {
    const QField f = catalog_field("branch_sqrt", {}, h);
    const std::vector<double> v{0.7, -1.3};
    const double d0 = dirichlet_energy(f), d1 = dirichlet_energy(f.shifted(v));
    const double rel = std::abs(d1 - d0) / d0;
    out.push_back(row("qfield", "energy_translation", rel <= 1e-12, rel, 1e-12, "branch_sqrt"));
  }
  {
    double worst = 0.0;
    auto split_gap = [&](const QField& f) {
      const double lhs = dirichlet_energy(f);
      const double rhs = dirichlet_energy(f.mean_free_field()) + f.q() * dirichlet_energy(f.average());
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(lhs, 1e-300));
    };
    split_gap(catalog_field("linear_pair", {{"A", {1.0, 0.5}}, {"B", {-0.3, 2.0}}}, h));
    split_gap(catalog_field("appendix_fa", {{"a", 1.0}}, h));
    split_gap(sample(separated_pair(), Grid::centered_box(2, 1.0, h)));
    out.push_back(row("qfield", "dirichlet_split", worst <= 1e-10, worst, 1e-10,
                      "decomposable: linear_pair, appendix_fa(a=1), separated pair"));
  }
  {
    const CatalogEntry e = make_catalog("linear_pair", {{"A", {1.0, 0.5}}, {"B", {-0.3, 2.0}}});
    const QField f = sample(e.map, Grid::centered_box(2, 1.0, 1.0 / 64.0));
    const std::vector<double> x0{0.25, -0.125};
    const double r = 0.5, lam = 1.7;
    const QField g = rescale(f, x0, r, lam);
    const double lhs = dirichlet_energy(g, Region::ball({0.0, 0.0}, 1.0));
    const double rhs = lam * lam * dirichlet_energy(f, Region::ball(x0, r));
    const double rel = std::abs(lhs - rhs) / rhs;
    out.push_back(row("qfield", "rescale_energy_law", rel <= 1e-10, rel, 1e-10, "piecewise affine pair, m=2"));
  }
  {
    const QField f = sample(separated_pair(), Grid::centered_box(2, 1.0, h));
    Rng rng(opt.seed + 1);
    std::vector<double> vals(f.values());
    const std::size_t blk = static_cast<std::size_t>(f.q()) * f.n();
    for (std::size_t i = 0; i < f.size(); ++i)
      if (pick(rng, 0, 1)) std::rotate(vals.begin() + i * blk, vals.begin() + i * blk + f.n(),
                                       vals.begin() + (i + 1) * blk);
    const QField a = branch_decompose(QField(f.grid(), f.q(), f.n(), f.values()));
    const QField b = branch_decompose(QField(f.grid(), f.q(), f.n(), std::move(vals)));
    double direct = 0.0, swapped = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      for (int l = 0; l < 2; ++l)
        for (int c = 0; c < f.n(); ++c) {
          direct = std::max(direct, std::abs(a.branch_value(i, l)[c] - b.branch_value(i, l)[c]));
          swapped = std::max(swapped, std::abs(a.branch_value(i, l)[c] - b.branch_value(i, 1 - l)[c]));
        }
    const double gap = std::min(direct, swapped);
    out.push_back(row("qfield", "decompose_order_independence", gap == 0.0, gap, 0.0,
                      "labels agree up to a global permutation"));
  }
}

// ------------------------------------------------------------- variations

void variation_rows(const InvariantOptions& opt, std::vector<InvariantRow>& out) {
  const double h = opt.h;
  {
    double worst = -1e300;
    for (const auto& id : catalog_ids())
      worst = std::max(worst, lip_bounds_check(catalog_field(id, {}, h)).worst_violation);
    out.push_back(row("variations", "metric_tensor_bounds", worst <= 1e-12, worst, 1e-12,
                      "all catalog entries"));
  }
  {
    const QField f = sample(separated_pair(), Grid::centered_box(2, 1.0, h));
    TestFamilyOptions xo;
    xo.u_radius = 0.0;
    double worst = 0.0;
    for (const auto& psi : canonical_family(TestField::Kind::Outer, 2, 2, xo)) {
      const double whole = outer_variation_area(f, psi).value;
      double parts = 0.0;
      for (int b = 0; b < 2; ++b) {
        std::vector<double> v;
        for (std::size_t i = 0; i < f.size(); ++i)
          v.insert(v.end(), f.branch_value(i, b).begin(), f.branch_value(i, b).end());
        parts += outer_variation_area(QField(f.grid(), 1, f.n(), std::move(v)), psi).value;
      }
      worst = std::max(worst, std::abs(whole - parts) / std::max(1.0, std::abs(whole)));
    }
    out.push_back(row("variations", "outer_branch_additivity", worst <= 1e-12, worst, 1e-12,
                      "x-only psi on a decomposable pair"));
  }
  {
    const std::vector<double> hs{1.0 / 32, 1.0 / 64, 1.0 / 128};
    std::vector<FamilyMax> r;
    for (double hh : hs) r.push_back(residual_maxima(catalog_field("branch_sqrt", {}, hh)));
    auto emit = [&](const char* name, double FamilyMax::*mem) {
      std::vector<double> y;
      for (const auto& x : r) y.push_back(x.*mem);
      const bool zero = *std::max_element(y.begin(), y.end()) <= 1e-12;
      const double s = zero ? INFINITY : lsq_slope(hs, y);
      out.push_back(row("variations", std::string("residual_convergence_") + name, zero || s >= 0.9, s,
                        0.9, zero ? "machine zero at every h" : "log-log slope on branch_sqrt"));
    };
    emit("outer_area", &FamilyMax::outer);
    emit("inner_area", &FamilyMax::inner);
    emit("dirichlet_O", &FamilyMax::O);
    emit("dirichlet_I", &FamilyMax::I);
    emit("dirichlet_S", &FamilyMax::S);
    emit("dirichlet_avg", &FamilyMax::avg);
  }
  {
    double worst = 0.0;
    for (const char* id : {"branch_sqrt", "appendix_g"}) {
      const QField f = catalog_field(id, {}, h);
      std::vector<double> v(f.n(), 0.0);
      v[0] = 2.5;
      const QField g = f.shifted(v);
      for (const auto& phi : canonical_family(TestField::Kind::Inner, f.m(), f.n())) {
        const double a = inner_variation_area(f, phi).value, b = inner_variation_area(g, phi).value;
        worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
      }
    }
    out.push_back(row("variations", "inner_translation", worst <= 1e-12, worst, 1e-12,
                      "branch_sqrt, appendix_g"));
  }
}

// -------------------------------------------------------------- frequency

void frequency_rows(const InvariantOptions& opt, std::vector<InvariantRow>& out) {
  const double h = opt.h;
  const QField bs = catalog_field("branch_sqrt", {}, h);
  {
    double worst = 0.0;
    const std::vector<std::pair<std::vector<double>, double>> cases{{{0.0, 0.0}, 0.5},
                                                                    {{8 * h, 4 * h}, 0.25}};
    for (const auto& [x0, r] : cases) {
      const double I0 = frequency(bs, x0, r).I;
      // Two spare layers keep one-sided stencils off the unit ball.
      const Grid pad = Grid::centered_box(2, 1.0 + 2.0 * h / r, h / r);
      const double I1 = frequency(rescale(bs, x0, r, 3.7, pad), std::vector<double>{0.0, 0.0}, 1.0).I;
      worst = std::max(worst, std::abs(I1 - I0) / I0);
    }
    out.push_back(row("frequency", "scale_invariance", worst <= 1e-6, worst, 1e-6, "branch_sqrt"));
  }
  {
    double worst = INFINITY;
    for (const char* id : {"branch_sqrt", "cone_1d", "linear_pair"}) {
      const CatalogEntry e = make_catalog(id);
      const QField f = catalog_field(id, {}, h);
      const auto pr = frequency_profile(f, e.base_point, default_ladder(f, e.base_point));
      for (std::size_t k = 1; k < pr.radii.size(); ++k) {
        worst = std::min(worst, (pr.D[k] - pr.D[k - 1]) / pr.D.back());
        worst = std::min(worst, (pr.H[k] - pr.H[k - 1]) / pr.H.back());
      }
    }
    out.push_back(row("frequency", "D_H_nondecreasing", worst >= -h, worst, -h,
                      "relative increments on classical solutions"));
  }
  {
    std::vector<double> err;
    for (double hh : {1.0 / 64, 1.0 / 128}) {
      const QField f = catalog_field("branch_sqrt", {}, hh);
      const std::vector<double> x0{0.0, 0.0};
      err.push_back(derivative_identity_check(frequency_profile(f, x0, geometric(0.05, 0.5, 16))));
    }
    const bool ok = err[1] <= err[0] || err[1] <= 1e-3;
    out.push_back(row("frequency", "derivative_identity_refinement", ok, err[1], err[0],
                      "error at h/2 against error at h (tolerance column)"));
  }
  {
    int bad = 0;
    double worst_spread = 0.0;
    std::string note;
    const std::vector<std::pair<std::string, nlohmann::json>> entries{
        {"linear_pair", {}}, {"cone_1d", {}}, {"appendix_g", {}}, {"appendix_fa", {{"a", 0.0}}},
        {"appendix_fa", {{"a", 1.0}}}, {"branch_sqrt", {}}, {"perturbed_plane", {}}};
    for (const auto& [id, p] : entries) {
      const CatalogEntry e = make_catalog(id, p);
      const double hh = e.map.m == 1 ? 1.0 / 1024 : h;
      const QField f = sample(e.map, Grid::centered_box(e.map.m, 1.0, hh));
      const auto pr = frequency_profile(f, e.base_point, geometric(0.125, 0.5, 8));
      const auto [lo, hi] = std::minmax_element(pr.I.begin(), pr.I.end());
      const double spread = *hi - *lo;
      const double mean = std::accumulate(pr.I.begin(), pr.I.end(), 0.0) / pr.I.size();
      const HomogeneityFit fit = homogeneity_degree(f, e.base_point);
      const bool homog = fit.misfit <= 0.02;
      const bool flat = spread <= 0.02;
      const bool agree = homog == flat && (!homog || std::abs(fit.alpha - mean) <= 0.02);
      if (!agree) {
        ++bad;
        note += id + p.dump() + " ";
      }
      if (homog) worst_spread = std::max(worst_spread, spread);
    }
    out.push_back(row("frequency", "constant_I_iff_homogeneous", bad == 0, worst_spread, 0.02,
                      bad ? "disagree: " + note : "value = largest I spread among homogeneous entries"));
  }
}

// ---------------------------------------------------------- approximation

void approximation_rows(const InvariantOptions& opt, std::vector<InvariantRow>& out) {
  const double gamma = 0.02;
  const Grid g = Grid::centered_box(2, 0.5, opt.h);
  std::vector<double> E, meas, lip, gap;
  bool coincide = true, nonvacuous = false;
  for (double lam : {0.02, 0.04, 0.08}) {
    const CatalogEntry e = make_catalog("perturbed_plane", {{"lambda", lam}, {"kappa", 3.0}});
    const QField f = sample(e.map, g);
    TruncationOptions to;
    to.r = 0.5;
    to.eps = 2.0;
    const TruncationResult t = lipschitz_truncate(f, gamma, to);
    const std::size_t blk = static_cast<std::size_t>(f.q()) * f.n();
    for (std::size_t i = 0; i < f.size(); ++i)
      if (t.K[i] && std::memcmp(f.values().data() + i * blk, t.fhat.values().data() + i * blk,
                                blk * sizeof(double)) != 0)
        coincide = false;
    nonvacuous = nonvacuous || t.stats.bad_nodes > 0;
    E.push_back(t.stats.E);
    meas.push_back(t.stats.bad_measure);
    lip.push_back(t.stats.lip);
    gap.push_back(t.stats.area_gap / std::pow(t.stats.E, 1.0 + gamma));
  }
  out.push_back(row("approximation", "fhat_equals_f_on_K", coincide && nonvacuous, coincide ? 0.0 : 1.0,
                    0.0, nonvacuous ? "bitwise, perturbed_plane sweep" : "bad set empty"));
  const double ls = lsq_slope(E, lip);
  out.push_back(row("approximation", "lip_fit_slope", std::abs(ls - gamma) <= 0.2, ls, 0.2,
                    "slope of Lip(fhat) against E; tolerance is the distance to gamma"));
  const bool positive = std::all_of(meas.begin(), meas.end(), [](double x) { return x > 0.0; });
  const double ms = positive ? lsq_slope(E, meas) : 0.0;
  out.push_back(row("approximation", "bad_set_slope", positive && ms >= 1.0, ms, 1.0,
                    "slope of |B\\K| against E"));
  const double gmax = *std::max_element(gap.begin(), gap.end());
  out.push_back(row("approximation", "area_gap_bounded", gmax <= 1.0, gmax, 1.0,
                    "max of area gap / E^(1+gamma) over the sweep"));

  {
    double worst = INFINITY;
    std::string which;
    const std::vector<std::pair<std::string, nlohmann::json>> entries{
        {"linear_pair", {}}, {"cone_1d", {}}, {"appendix_fa", {{"a", 0.0}}}, {"branch_sqrt", {}}};
    for (const auto& [id, p] : entries) {
      const CatalogEntry e = make_catalog(id, p);
      if (!e.props.graph_stationary) continue;
      std::vector<double> pt(e.base_point);
      std::vector<double> vals(static_cast<std::size_t>(e.map.q) * e.map.n);
      e.map.eval(e.base_point, vals);
      for (int c = 0; c < e.map.n; ++c) pt.push_back(vals[c]);
      double prev = -INFINITY;
      for (double r : geometric(0.05, 0.5, 8)) {
        const double mr = mass_ratio(e.map, pt, r);
        if (std::isfinite(prev)) worst = std::min(worst, mr - prev);
        prev = mr;
      }
      which += id + " ";
    }
    out.push_back(row("approximation", "mass_ratio_monotone", worst >= -1e-6, worst, -1e-6, which));
  }
  {
    std::vector<double> ratios;
    const std::vector<double> base{0.0, 0.0};
    for (double hh : {1.0 / 64, 1.0 / 128})
      ratios.push_back(reverse_holder_check(catalog_field("branch_sqrt", {}, hh), 1.25,
                                            ball_family(base, 20, 0.2, 0.3)));
    const double change = std::abs(ratios[1] - ratios[0]) / ratios[0];
    out.push_back(row("approximation", "reverse_holder_uniform", change <= 0.1, change, 0.1,
                      "relative change between h = 1/64 and 1/128"));
  }
}

// --------------------------------------------------------------- examples

void example_rows(const InvariantOptions&, std::vector<InvariantRow>& out) {
  const CatalogEntry bs = make_catalog("branch_sqrt");
  double worst_c = 0.0, energy_rise = 0.0, worst_l2 = 0.0;
  for (double hh : {1.0 / 32, 1.0 / 64}) {
    RelaxationConfig c;
    c.boundary = bs.map;
    c.grid = Grid::centered_box(2, 1.0, hh);
    c.region = Region::ball({0.0, 0.0}, 0.9);
    c.tolerance = 1e-11;
    c.zero_initial = true;
    c.max_iterations = 100000;
    RelaxationReport rep;
    const QField u = dir_relax(c, &rep);
    const FamilyMax r = residual_maxima(u);
    worst_c = std::max(worst_c, r.dirichlet() / hh);
    for (std::size_t k = 1; k < rep.energy_history.size(); ++k)
      energy_rise = std::max(energy_rise, (rep.energy_history[k] - rep.energy_history[k - 1]) /
                                              rep.energy_history[k - 1]);
    worst_l2 = std::max(worst_l2, l2_distance(u, sample(bs.map, c.grid)) / hh);
  }
  out.push_back(row("examples", "relax_residuals_order_h", worst_c <= 5.0, worst_c, 5.0,
                    "max Dirichlet residual / h, branch_sqrt boundary"));
  out.push_back(row("examples", "relax_energy_monotone", energy_rise <= 1e-12, energy_rise, 1e-12,
                    "largest relative rise per sweep"));
  out.push_back(row("examples", "relax_l2_to_closed_form", worst_l2 <= 1.0, worst_l2, 1.0,
                    "L2 distance / h from a constant start"));

  const double h = 1.0 / 128;
  const std::vector<std::pair<std::string, nlohmann::json>> entries{
      {"linear_pair", {}}, {"cone_1d", {}}, {"appendix_g", {}}, {"appendix_fa", {{"a", 0.0}}},
      {"appendix_fa", {{"a", 1.0}}}, {"branch_sqrt", {}}, {"perturbed_plane", {{"lambda", 0.5}}}};
  for (const auto& [id, p] : entries) {
    const CatalogEntry e = make_catalog(id, p);
    const QField f = sample(e.map, Grid::centered_box(e.map.m, 1.0, h));
    const FamilyMax r = residual_maxima(f);
    // Declared true: residual within 5h. Declared false: residual above 10h.
    auto agrees = [&](bool flag, double res) { return flag ? res <= 5.0 * h : res > 10.0 * h; };
    int bad = 0;
    std::string note;
    auto check = [&](const char* what, bool flag, double res) {
      if (!agrees(flag, res)) {
        ++bad;
        note += std::string(what) + " ";
      }
    };
    check("outer_area", e.props.outer_area_stationary, r.outer);
    check("inner_area", e.props.inner_area_stationary, r.inner);
    check("dirichlet", e.props.dirichlet_classical, r.dirichlet());
    const HomogeneityFit fit = homogeneity_degree(f, e.base_point);
    if (e.props.homogeneity) {
      if (!(std::abs(fit.alpha - *e.props.homogeneity) <= 0.01 && fit.misfit <= 1e-6)) {
        ++bad;
        note += "homogeneity ";
      }
    } else if (fit.misfit <= 0.02) {
      ++bad;
      note += "inhomogeneity ";
    }
    out.push_back(row("examples", "declared_properties_" + id + (p.empty() ? "" : p.dump()), bad == 0,
                      bad, 0.0, bad ? "mismatch: " + note : "h = 1/128"));
  }
}

// -------------------------------------------------------------------- cli

void cli_rows(const InvariantOptions& opt, std::vector<InvariantRow>& out) {
  {
    const CatalogEntry e = make_catalog("linear_pair", {{"A", {1.0, 0.5}}, {"B", {-0.3, 2.0}}});
    const QField f = branch_decompose(sample(e.map, Grid::centered_box(2, 1.0, 1.0 / 16)));
    const Json j = to_json(f);
    const Json j2 = to_json(qfield_from_json(Json::parse(j.dump())));
    Rng rng(opt.seed + 2);
    const QPoint p = random_point(rng, 3, 2, 10.0);
    const bool qp = to_json(qpoint_from_json(Json::parse(to_json(p).dump()))) == to_json(p);
    out.push_back(row("cli", "json_round_trip", j == j2 && qp, j == j2 && qp ? 0.0 : 1.0, 0.0,
                      "QField with labels and mask, QPoint"));
  }
  {
    const QField f = catalog_field("branch_sqrt", {}, opt.h);
    const std::vector<double> x0{0.0, 0.0};
    auto run = [&] {
      std::vector<double> v;
      const auto fr = frequency(f, x0, 0.5);
      v.push_back(fr.D);
      v.push_back(fr.H);
      v.push_back(dirichlet_energy(f, Region::ball(x0, 0.7)));
      v.push_back(cyl_excess(f, x0, 0.5).E);
      const auto mf = maximal_function(f);
      v.push_back(std::accumulate(mf.begin(), mf.end(), 0.0));
      return v;
    };
    const int saved = thread_count();
    set_thread_count(1);
    const auto a = run();
    set_thread_count(4);
    const auto b = run();
    set_thread_count(saved);
    const bool same = std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
    out.push_back(row("cli", "thread_count_determinism", same, same ? 0.0 : 1.0, 0.0,
                      std::getenv("QVAR_THREADS") ? "QVAR_THREADS is set and pins both runs"
                                                  : "1 and 4 workers, bitwise"));
  }
}

}  // namespace

double retraction_lipschitz(const SplitScheme& scheme, int trials, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const QPoint a = near_anchor(scheme, rng, 6.0 * scheme.scale, 1.0);
    const QPoint b = near_anchor(scheme, rng, 6.0 * scheme.scale, 1.0);
    const double d = g_dist(a, b);
    if (d <= 1e-12) continue;
    const double dc = g_dist(concat(split_retraction(a, scheme)), concat(split_retraction(b, scheme)));
    worst = std::max(worst, dc / d);
  }
  return worst;
}

bool all_pass(const std::vector<InvariantRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const InvariantRow& r) { return r.skipped || r.pass; });
}

std::vector<InvariantRow> suite_invariants(const InvariantOptions& opt) {
  std::vector<InvariantRow> out;
  aq_rows(opt, out);
  qfield_rows(opt, out);
  variation_rows(opt, out);
  frequency_rows(opt, out);
  approximation_rows(opt, out);
  example_rows(opt, out);
  cli_rows(opt, out);
  return out;
}

std::vector<InvariantRow> field_invariants(const QField& f, const InvariantOptions&) {
  std::vector<InvariantRow> out;
  const LipBoundsReport lb = lip_bounds_check(f);
  out.push_back(row("variations", "metric_tensor_bounds", lb.worst_violation <= 1e-12, lb.worst_violation,
                    1e-12));

  std::vector<double> v(f.n(), 0.0);
  v[0] = 0.75;
  const QField g = f.shifted(v);
  const double d0 = dirichlet_energy(f);
  const double rel = std::abs(dirichlet_energy(g) - d0) / std::max(d0, 1e-300);
  out.push_back(row("qfield", "energy_translation", rel <= 1e-12 || d0 == 0.0, rel, 1e-12));

  const double split = dirichlet_energy(f.mean_free_field()) + f.q() * dirichlet_energy(f.average());
  const double srel = std::abs(split - d0) / std::max(d0, 1e-300);
  out.push_back(row("qfield", "dirichlet_split", srel <= 1e-10 || d0 == 0.0, srel, 1e-10,
                    "exact where every node is decomposable"));

  try {
    const auto phi = canonical_family(TestField::Kind::Inner, f.m(), f.n()).front();
    const double a = inner_variation_area(f, phi).value, b = inner_variation_area(g, phi).value;
    const double d = std::abs(a - b) / std::max(1.0, std::abs(a));
    out.push_back(row("variations", "inner_translation", d <= 1e-12, d, 1e-12));
  } catch (const DomainError& e) {
    out.push_back(skipped("variations", "inner_translation", e.what()));
  }

  const Grid& gr = f.grid();
  std::vector<double> c(gr.m);
  double half = INFINITY;
  for (int i = 0; i < gr.m; ++i) {
    const int mid = (gr.extents[i] - 1) / 2;
    c[i] = gr.origin[i] + gr.h * mid;
    half = std::min({half, c[i] - gr.lo(i), gr.hi(i) - c[i]});
  }
  const double r = gr.h * std::floor(0.5 * half / gr.h);
  const Grid pad = Grid::centered_box(gr.m, 1.0 + 2.0 * gr.h / r, gr.h / r);
  try {
    if (r < 4.0 * gr.h) throw DomainError("grid too small for a frequency ball");
    const double I0 = frequency(f, c, r).I;
    const double I1 = frequency(rescale(f, c, r, 3.7, pad), std::vector<double>(gr.m, 0.0), 1.0).I;
    const double d = std::abs(I1 - I0) / std::max(std::abs(I0), 1e-300);
    out.push_back(row("frequency", "scale_invariance", d <= 1e-6, d, 1e-6, "at the center node"));
  } catch (const Error& e) {
    out.push_back(skipped("frequency", "scale_invariance", e.what()));
  }

  const Json j = to_json(f);
  const bool same = to_json(qfield_from_json(Json::parse(j.dump()))) == j;
  out.push_back(row("cli", "json_round_trip", same, same ? 0.0 : 1.0, 0.0));
  return out;
}

}  // namespace qvar

// qvar: batch front-end for the Q-valued function laboratory.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qvar/approximation.hpp"
#include "qvar/catalog.hpp"
#include "qvar/frequency.hpp"
#include "qvar/invariants.hpp"
#include "qvar/io.hpp"
#include "qvar/parallel.hpp"
#include "qvar/variations.hpp"

using namespace qvar;

namespace {

constexpr const char* kVersion = "qvar 1.0";

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
};

// Options that can also come from the --config JSON. CLI flags win.
class Knobs {
 public:
  explicit Knobs(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& key, T& var, const std::string& help) {
    CLI::Option* o = app_->add_option("--" + key, var, help)->capture_default_str();
    entries_.push_back({key, o, [&var](const Json& j) { var = j.get<T>(); }});
    return o;
  }
  CLI::Option* add(const std::string& key, bool& var, const std::string& help) {
    CLI::Option* o = app_->add_flag("--" + key, var, help);
    entries_.push_back({key, o, [&var](const Json& j) { var = j.get<bool>(); }});
    return o;
  }
  // Numbers written as text ("1/128") are parsed by parse_number.
  CLI::Option* add_number(const std::string& key, double& var, const std::string& help) {
    CLI::Option* o = app_->add_option_function<std::string>(
        "--" + key, [&var](const std::string& s) { var = parse_number(s); }, help);
    entries_.push_back({key, o, [&var](const Json& j) {
                          var = j.is_string() ? parse_number(j.get<std::string>()) : j.get<double>();
                        }});
    return o;
  }
  CLI::Option* add_list(const std::string& key, std::vector<double>& var, const std::string& help) {
    CLI::Option* o = app_->add_option_function<std::string>(
        "--" + key, [&var](const std::string& s) { var = parse_list(s); }, help);
    entries_.push_back({key, o, [&var](const Json& j) {
                          var = j.is_string() ? parse_list(j.get<std::string>())
                                              : j.get<std::vector<double>>();
                        }});
    return o;
  }

  void apply(const Json& cfg) const {
    if (cfg.is_null()) return;
    for (const auto& e : entries_)
      if (e.opt->count() == 0 && cfg.contains(e.key)) {
        try {
          e.set(cfg.at(e.key));
        } catch (const Json::exception& ex) {
          throw FormatError("config key '" + e.key + "': " + ex.what());
        }
      }
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* opt;
    std::function<void(const Json&)> set;
  };
  CLI::App* app_;
  std::vector<Entry> entries_;
};

Json load_config(const std::string& path) {
  if (path.empty()) return Json();
  Json j = read_json_file(path);
  if (!j.is_object()) throw FormatError(path + ": config must be a JSON object");
  return j;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text_file(out, text);
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string r = "\"";
  for (char c : s) r += c == '"' ? std::string("\"\"") : std::string(1, c);
  return r + "\"";
}

std::string config_line(const Json& cfg) { return "# config: " + cfg.dump() + "\n"; }

QField load_field(const std::string& path) { return qfield_from_json(read_json_file(path)); }

std::vector<double> grid_center(const Grid& g) {
  std::vector<double> c(g.m);
  for (int i = 0; i < g.m; ++i) c[i] = g.origin[i] + g.h * ((g.extents[i] - 1) / 2);
  return c;
}

Json params_json(const std::string& text) {
  if (text.empty()) return Json::object();
  try {
    Json p = Json::parse(text);
    if (!p.is_object()) throw FormatError("--params must be a JSON object");
    return p;
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("--params: ") + e.what());
  }
}

Json props_json(const CatalogProperties& p) {
  Json j;
  j["homogeneity"] = p.homogeneity ? Json(*p.homogeneity) : Json(nullptr);
  j["outer_area_stationary"] = p.outer_area_stationary;
  j["inner_area_stationary"] = p.inner_area_stationary;
  j["dirichlet_classical"] = p.dirichlet_classical;
  j["graph_stationary"] = p.graph_stationary;
  return j;
}

// ------------------------------------------------------------ gen-example

struct GenOpts {
  std::string id;
  std::string params;
  double h = 1.0 / 128.0;
  double half = 1.0;
  bool relax = false;
  double region_radius = 0.9;
  double tolerance = 1e-10;
  int max_iterations = 200000;
  bool zero_initial = false;
  bool nested = false;
};

Json gen_example(const GenOpts& o, Json& cfg) {
  const CatalogEntry e = make_catalog(o.id, params_json(o.params));
  const Grid g = Grid::centered_box(e.map.m, o.half, o.h);
  cfg["id"] = o.id;
  cfg["params"] = e.params;
  cfg["h"] = o.h;
  cfg["half"] = o.half;
  cfg["relax"] = o.relax;
  QField f;
  Json info;
  if (o.relax) {
    RelaxationConfig rc;
    rc.boundary = e.map;
    rc.grid = g;
    rc.region = Region::ball(e.base_point, o.region_radius);
    rc.tolerance = o.tolerance;
    rc.max_iterations = o.max_iterations;
    rc.zero_initial = o.zero_initial;
    rc.nested = o.nested;
    cfg["region_radius"] = o.region_radius;
    cfg["tolerance"] = o.tolerance;
    cfg["max_iterations"] = o.max_iterations;
    cfg["zero_initial"] = o.zero_initial;
    cfg["nested"] = o.nested;
    RelaxationReport rep;
    f = dir_relax(rc, &rep);
    info = {{"iterations", rep.iterations}, {"final_movement", rep.final_movement},
            {"final_energy", rep.energy_history.empty() ? 0.0 : rep.energy_history.back()}};
  } else {
    f = sample(e.map, g);
  }
  Json j = to_json(f);
  j["example"] = {{"id", e.id}, {"params", e.params}, {"properties", props_json(e.props)},
                  {"base_point", e.base_point}};
  if (o.relax) j["relaxation"] = info;
  j["config"] = cfg;
  return j;
}

// -------------------------------------------------------------- frequency

struct FreqOpts {
  std::string input;
  std::vector<double> x0;
  int ladder = 12;
  double rmin = 0.0, rmax = 0.0;
};

std::string frequency_csv(const FreqOpts& o, Json& cfg) {
  const QField f = load_field(o.input);
  const std::vector<double> x0 = o.x0.empty() ? grid_center(f.grid()) : o.x0;
  if (static_cast<int>(x0.size()) != f.m()) throw DimensionError("--x0 must have m coordinates");
  std::vector<double> radii;
  if (o.rmin > 0.0 && o.rmax > o.rmin) {
    for (int k = 0; k < o.ladder; ++k)
      radii.push_back(o.rmin * std::pow(o.rmax / o.rmin, o.ladder > 1 ? k / (o.ladder - 1.0) : 0.0));
  } else {
    radii = default_ladder(f, x0, o.ladder);
  }
  cfg["input"] = o.input;
  cfg["x0"] = x0;
  cfg["radii"] = radii;
  const FrequencyProfile p = frequency_profile(f, x0, radii);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < p.radii.size(); ++k)
    rows.push_back({p.radii[k], p.D[k], p.H[k], p.I[k], p.dH_check[k]});
  std::ostringstream os;
  os << config_line(cfg);
  write_csv(os, {"r", "D", "H", "I", "dH_check"}, rows);
  return os.str();
}

// ------------------------------------------------------------- variations

struct VarRow {
  std::string functional, test_id;
  Residual r;
};

std::vector<VarRow> variation_rows(const QField& f, std::uint64_t seed) {
  const int m = f.m(), n = f.n();
  TestFamilyOptions fo;
  fo.seed = seed;
  TestFamilyOptions xo = fo;
  xo.u_radius = 0.0;
  const auto sc = canonical_family(TestField::Kind::Scalar, m, n, fo);
  const auto in = canonical_family(TestField::Kind::Inner, m, n, fo);
  const auto out = canonical_family(TestField::Kind::Outer, m, n, fo);
  const auto outx = canonical_family(TestField::Kind::Outer, m, n, xo);
  std::vector<VarRow> rows;
  for (const auto& t : out) rows.push_back({"outer_area", t.id, outer_variation_area(f, t)});
  for (const auto& t : in) rows.push_back({"inner_area", t.id, inner_variation_area(f, t)});
  for (const auto& t : sc) rows.push_back({"dirichlet_outer", t.id, dirichlet_outer(f, t)});
  for (const auto& t : in) rows.push_back({"dirichlet_inner", t.id, dirichlet_inner(f, t)});
  for (const auto& t : out) rows.push_back({"dirichlet_strong_outer", t.id, dirichlet_strong_outer(f, t)});
  for (const auto& t : outx) rows.push_back({"dirichlet_average", t.id + "_x", dirichlet_average(f, t)});
  return rows;
}

std::string variations_csv(const std::string& input, std::uint64_t seed, Json& cfg) {
  const QField f = load_field(input);
  cfg["input"] = input;
  std::ostringstream os;
  os << config_line(cfg);
  os << "functional,test_field_id,residual,h,quadrature_error\n";
  for (const auto& v : variation_rows(f, seed))
    os << v.functional << ',' << csv_field(v.test_id) << ',' << fmt17(v.r.value) << ','
       << fmt17(f.grid().h) << ',' << fmt17(v.r.quadrature_error) << '\n';
  return os.str();
}

// ----------------------------------------------------------------- approx

struct ApproxOpts {
  std::string id = "perturbed_plane";
  std::string params;
  std::vector<double> lambdas;
  double gamma = 0.02;
  double eps = 1e-2;
  double r = 0.25;
  double h = 1.0 / 128.0;
  double half = 1.0;
  int rho_max = 16;
  std::string manifest;
};

struct ApproxRow {
  double lambda;
  TruncationStats s;
};

std::vector<ApproxRow> approx_sweep(const ApproxOpts& o, Json& cfg) {
  std::vector<double> lambdas = o.lambdas;
  if (lambdas.empty())
    for (int k = 0; k < 8; ++k) lambdas.push_back(0.02 * std::pow(10.0, k / 7.0));
  const Json base = params_json(o.params);
  cfg["id"] = o.id;
  cfg["params"] = base;
  cfg["lambdas"] = lambdas;
  cfg["gamma"] = o.gamma;
  cfg["eps"] = o.eps;
  cfg["r"] = o.r;
  cfg["h"] = o.h;
  cfg["half"] = o.half;
  cfg["rho_max"] = o.rho_max;
  std::vector<ApproxRow> rows;
  for (double lam : lambdas) {
    Json p = base;
    p["lambda"] = lam;
    const CatalogEntry e = make_catalog(o.id, p);
    const QField f = sample(e.map, Grid::centered_box(e.map.m, o.half, o.h));
    TruncationOptions to;
    to.x0 = e.base_point;
    to.r = o.r;
    to.eps = o.eps;
    to.rho_max = o.rho_max;
    rows.push_back({lam, lipschitz_truncate(f, o.gamma, to).stats});
  }
  return rows;
}

std::string approx_csv(const std::string& id, const std::vector<ApproxRow>& rows, const Json& cfg) {
  std::ostringstream os;
  os << config_line(cfg);
  os << "example_id,lambda,E,lip_fhat,bad_measure,area_gap,l2_gap\n";
  for (const auto& r : rows)
    os << id << ',' << fmt17(r.lambda) << ',' << fmt17(r.s.E) << ',' << fmt17(r.s.lip) << ','
       << fmt17(r.s.bad_measure) << ',' << fmt17(r.s.area_gap) << ',' << fmt17(r.s.l2_gap) << '\n';
  return os.str();
}

Json approx_json(const std::vector<ApproxRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows)
    a.push_back({{"lambda", r.lambda}, {"E", r.s.E}, {"lip_fhat", r.s.lip}, {"bad_measure", r.s.bad_measure},
                 {"bad_nodes", r.s.bad_nodes}, {"threshold", r.s.threshold}, {"area_gap", r.s.area_gap},
                 {"l2_gap", r.s.l2_gap}});
  return a;
}

// ------------------------------------------------------------- invariants

std::string invariants_csv(const std::vector<InvariantRow>& rows, const Json& cfg) {
  std::ostringstream os;
  os << config_line(cfg);
  os << "module,name,pass,skipped,value,tolerance,note\n";
  for (const auto& r : rows)
    os << r.module << ',' << csv_field(r.name) << ',' << (r.pass ? 1 : 0) << ',' << (r.skipped ? 1 : 0) << ','
       << fmt17(r.value) << ',' << fmt17(r.tolerance) << ',' << csv_field(r.note) << '\n';
  return os.str();
}

Json invariants_json(const std::vector<InvariantRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows)
    a.push_back({{"module", r.module}, {"name", r.name}, {"pass", r.pass}, {"skipped", r.skipped},
                 {"value", r.value}, {"tolerance", r.tolerance}, {"note", r.note}});
  return a;
}

// ----------------------------------------------------------------- report

struct ReportOpts {
  double h = 1.0 / 64.0;
  bool invariants = true;
};

Json build_report(const ReportOpts& o, std::uint64_t seed, Json& cfg) {
  cfg["h"] = o.h;
  cfg["invariants"] = o.invariants;
  Json rep;
  const CatalogEntry bs = make_catalog("branch_sqrt");
  const QField f = sample(bs.map, Grid::centered_box(2, 1.0, o.h));
  {
    const FrequencyProfile p = frequency_profile(f, bs.base_point, default_ladder(f, bs.base_point));
    rep["frequency"] = {{"example", "branch_sqrt"}, {"radii", p.radii}, {"I", p.I},
                        {"derivative_identity_error", derivative_identity_check(p)},
                        {"monotonicity_min_increment", monotonicity_check(p)}};
    const HomogeneityFit fit = homogeneity_degree(f, bs.base_point);
    rep["homogeneity"] = {{"alpha", fit.alpha}, {"misfit", fit.misfit}};
  }
  {
    Json v = Json::array();
    for (const auto& r : variation_rows(f, seed))
      v.push_back({{"functional", r.functional}, {"test_field_id", r.test_id}, {"residual", r.r.value},
                   {"quadrature_error", r.r.quadrature_error}});
    rep["variations"] = v;
  }
  {
    const double L = discrete_lipschitz(f);
    rep["estimates"] = {
        {"dirichlet_energy_unit_ball", dirichlet_energy(f, Region::ball({0.0, 0.0}, 1.0))},
        {"reverse_holder_p1.25", reverse_holder_check(f, 1.25, ball_family(bs.base_point, 20, 0.2, 0.3))},
        {"key_estimate_slack", key_estimate_check(f, ball_family(bs.base_point, 20, 0.05, 0.04), L).worst_slack},
        {"density", density_estimate(bs.map, std::vector<double>{0.0, 0.0, 0.0, 0.0},
                                     {0.01, 0.01 * std::sqrt(2.0), 0.02})},
        {"excess_r0.5", cyl_excess(f, bs.base_point, 0.5).E}};
  }
  {
    ApproxOpts ao;
    ao.h = o.h;
    ao.half = 0.5;
    ao.r = 0.5;
    ao.eps = 2.0;
    ao.params = R"({"kappa": 3})";
    ao.lambdas = {0.02, 0.04, 0.08};
    Json acfg;
    const auto rows = approx_sweep(ao, acfg);
    rep["approx"] = {{"config", acfg}, {"rows", approx_json(rows)}};
  }
  if (o.invariants) {
    InvariantOptions io;
    io.seed = seed;
    const auto rows = suite_invariants(io);
    rep["invariants"] = {{"all_pass", all_pass(rows)}, {"rows", invariants_json(rows)}};
  }
  rep["config"] = cfg;
  return rep;
}

void print_error(const std::string& kind, const std::string& message, int code) {
  const Json rec = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << rec.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for Q-valued functions with area-stationary graphs"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", kVersion);
  app.fallthrough();
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON file with option values (flags override)");
  app.add_option("--threads", common.threads, "worker threads (QVAR_THREADS overrides)");

  auto with_common = [&](CLI::App* sub, Knobs& k) {
    k.add("seed", common.seed, "random seed");
    sub->add_option("--out,-o", common.out, "output path (default stdout)");
  };

  GenOpts gen;
  CLI::App* s_gen = app.add_subcommand("gen-example", "write a catalog example as QField JSON");
  Knobs k_gen(s_gen);
  s_gen->add_option("id", gen.id, "catalog id")->required();
  k_gen.add("params", gen.params, "catalog parameters as a JSON object");
  k_gen.add_number("h", gen.h, "grid spacing, e.g. 1/128");
  k_gen.add_number("half", gen.half, "half width of the grid box");
  k_gen.add("relax", gen.relax, "replace the interior by a Dirichlet relaxation");
  k_gen.add_number("region-radius", gen.region_radius, "relaxation ball radius");
  k_gen.add_number("tolerance", gen.tolerance, "relaxation tolerance");
  k_gen.add("max-iterations", gen.max_iterations, "relaxation sweep cap");
  k_gen.add("zero-initial", gen.zero_initial, "start the relaxation from the trace mean");
  k_gen.add("nested", gen.nested, "coarse-to-fine initialization");
  with_common(s_gen, k_gen);

  FreqOpts fr;
  CLI::App* s_freq = app.add_subcommand("frequency", "frequency profile CSV of a QField JSON");
  Knobs k_freq(s_freq);
  s_freq->add_option("input", fr.input, "QField JSON")->required();
  k_freq.add_list("x0", fr.x0, "base point, comma separated (default grid center)");
  k_freq.add("ladder", fr.ladder, "number of radii");
  k_freq.add_number("rmin", fr.rmin, "smallest radius (default 4 h m)");
  k_freq.add_number("rmax", fr.rmax, "largest radius (default half the distance to the boundary)");
  with_common(s_freq, k_freq);

  std::string var_input;
  CLI::App* s_var = app.add_subcommand("variations", "stationarity CSV of a QField JSON");
  Knobs k_var(s_var);
  s_var->add_option("input", var_input, "QField JSON")->required();
  with_common(s_var, k_var);

  ApproxOpts ap;
  CLI::App* s_app = app.add_subcommand("approx", "Lipschitz truncation sweep CSV");
  Knobs k_app(s_app);
  s_app->add_option("id", ap.id, "catalog id with a lambda parameter")->capture_default_str();
  k_app.add("params", ap.params, "other catalog parameters as a JSON object");
  k_app.add_list("lambdas", ap.lambdas, "lambda values (default 8 geometric values in [0.02, 0.2])");
  k_app.add_number("gamma", ap.gamma, "truncation exponent");
  k_app.add_number("eps", ap.eps, "excess smallness threshold");
  k_app.add_number("r", ap.r, "truncation ball radius");
  k_app.add_number("h", ap.h, "grid spacing");
  k_app.add_number("half", ap.half, "half width of the grid box");
  k_app.add("rho-max", ap.rho_max, "maximal function radius cap in nodes");
  k_app.add("manifest", ap.manifest, "also write the sweep as JSON to this path");
  with_common(s_app, k_app);

  std::string inv_input;
  InvariantOptions inv;
  CLI::App* s_inv = app.add_subcommand("invariants", "pass/fail table of the property suite");
  Knobs k_inv(s_inv);
  s_inv->add_option("input", inv_input, "optional QField JSON for field-level checks");
  k_inv.add("trials", inv.trials, "randomized trials for metric checks");
  k_inv.add_number("h", inv.h, "grid spacing for catalog fields");
  with_common(s_inv, k_inv);

  ReportOpts rp;
  CLI::App* s_rep = app.add_subcommand("report", "merged JSON summary");
  Knobs k_rep(s_rep);
  k_rep.add_number("h", rp.h, "grid spacing");
  k_rep.add("invariants", rp.invariants, "include the invariant suite");
  with_common(s_rep, k_rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), 2);
    return 2;
  } catch (const Error& e) {
    print_error(e.kind(), e.what(), 2);
    return 2;
  }

  try {
    if (common.threads > 0) set_thread_count(common.threads);
    const Json file_cfg = load_config(common.config_path);
    for (Knobs* k : {&k_gen, &k_freq, &k_var, &k_app, &k_inv, &k_rep}) k->apply(file_cfg);

    Json cfg = {{"version", kVersion}, {"seed", common.seed}};
    if (s_gen->parsed()) {
      cfg["command"] = "gen-example";
      emit(common.out, gen_example(gen, cfg).dump() + "\n");
    } else if (s_freq->parsed()) {
      cfg["command"] = "frequency";
      cfg["ladder"] = fr.ladder;
      emit(common.out, frequency_csv(fr, cfg));
    } else if (s_var->parsed()) {
      cfg["command"] = "variations";
      emit(common.out, variations_csv(var_input, common.seed, cfg));
    } else if (s_app->parsed()) {
      cfg["command"] = "approx";
      const auto rows = approx_sweep(ap, cfg);
      emit(common.out, approx_csv(ap.id, rows, cfg));
      if (!ap.manifest.empty()) {
        const Json man = {{"config", cfg}, {"rows", approx_json(rows)}};
        write_text_file(ap.manifest, man.dump(2) + "\n");
      }
    } else if (s_inv->parsed()) {
      cfg["command"] = "invariants";
      cfg["trials"] = inv.trials;
      cfg["h"] = inv.h;
      inv.seed = common.seed;
      std::vector<InvariantRow> rows;
      if (!inv_input.empty()) {
        cfg["input"] = inv_input;
        rows = field_invariants(load_field(inv_input), inv);
      }
      const auto suite = suite_invariants(inv);
      rows.insert(rows.end(), suite.begin(), suite.end());
      emit(common.out, invariants_csv(rows, cfg));
      return all_pass(rows) ? 0 : 1;
    } else if (s_rep->parsed()) {
      cfg["command"] = "report";
      emit(common.out, build_report(rp, common.seed, cfg).dump(2) + "\n");
    }
  } catch (const Error& e) {
    print_error(e.kind(), e.what(), 2);
    return 2;
  } catch (const Json::exception& e) {
    print_error("format", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), 3);
    return 3;
  }
  return 0;
}

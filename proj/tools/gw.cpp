#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "gw/conditioning.hpp"
#include "gw/errors.hpp"
#include "gw/io.hpp"
#include "gw/montecarlo.hpp"
#include "gw/progeny.hpp"
#include "gw/spectral.hpp"
#include "gw/tilt.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

using nlohmann::json;

struct Run {
  std::string model_path;
  std::string out_path;
  unsigned threads = 0;
  double leak_tol = gw::kDefaultLeakTolerance;
  json tolerances = json::object();
  json seeds = json::object();
  std::string command_line;
  std::optional<gw::BranchingModel> model;
};

gw::Vector parse_vector(const std::string& text, std::size_t d) {
  gw::Vector out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw gw::ValidationError(fmt::format("'{}' is not a list of numbers", text));
    }
  }
  if (out.size() == 1 && d > 1) out.assign(d, out.front());
  if (out.size() != d) throw gw::ValidationError(fmt::format("expected {} numbers in '{}'", d, text));
  return out;
}

gw::State state_or_unit(const std::string& text, std::size_t d) {
  if (text.empty()) {
    gw::State e(d, 0);
    e[0] = 1;
    return e;
  }
  return gw::parse_state(text, d);
}

gw::Box box_for(const std::vector<int>& caps, std::size_t d) {
  if (caps.size() == 1) return gw::Box::cube(d, caps.front());
  if (caps.size() != d) throw gw::ValidationError(fmt::format("--cap needs 1 or {} values", d));
  return gw::Box(gw::State(caps.begin(), caps.end()));
}

void write_manifest(const Run& run) {
  json m;
  m["command_line"] = run.command_line;
  m["version"] = kVersion;
  m["model"] = run.model_path;
  m["model_hash"] = run.model ? gw::model_hash(*run.model) : "";
  m["tolerances"] = run.tolerances;
  m["seeds"] = run.seeds;
  m["output"] = run.out_path.empty() ? "stdout" : run.out_path;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m["created"] = stamp;
  const std::string path = run.out_path.empty() ? "gw.manifest.json" : run.out_path + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw gw::Error(fmt::format("cannot write manifest '{}'", path));
  out << m.dump(2) << '\n';
}

// ------------------------------------------------------------ commands

void cmd_validate(const Run& run, std::ostream& out) {
  const auto diag = gw::validate(*run.model);
  json j;
  j["d"] = run.model->d();
  j["nonsingular"] = diag.nonsingular;
  j["positive_regular"] = diag.positive_regular;
  j["regularity_witness"] = diag.regularity_witness;
  j["aperiodic_A5"] = diag.aperiodic_A5;
  try {
    const auto ext = gw::extinction_vector(*run.model);
    j["q_positive"] = true;
    j["q"] = ext.q;
  } catch (const gw::ValidationError&) {
    j["q_positive"] = false;
  }
  j["moment_orders_available"] = "all";
  out << j.dump(2) << '\n';
}

void cmd_spectral(const Run& run, std::ostream& out, int n_max) {
  const auto sp = gw::perron(*run.model);
  gw::CsvWriter csv(out);
  csv.header({"quantity", "index", "value"});
  csv.cell("rho").cell(0).cell(sp.rho).end_row();
  for (std::size_t i = 0; i < sp.u.size(); ++i) csv.cell("u").cell(i + 1).cell(sp.u[i]).end_row();
  for (std::size_t i = 0; i < sp.v.size(); ++i) csv.cell("v").cell(i + 1).cell(sp.v[i]).end_row();
  if (n_max > 0) {
    const auto gaps = gw::mean_power_diagnostic(*run.model, n_max);
    for (std::size_t n = 0; n < gaps.size(); ++n) csv.cell("power_gap").cell(n + 1).cell(gaps[n]).end_row();
  }
}

void cmd_extinction(const Run& run, std::ostream& out) {
  const auto ext = gw::extinction_vector(*run.model);
  gw::CsvWriter csv(out);
  csv.header({"type", "q"});
  for (std::size_t i = 0; i < ext.q.size(); ++i) csv.cell(i + 1).cell(ext.q[i]).end_row();
}

gw::TiltVector tilt_from(const Run& run, const std::string& a, bool critical, bool use_q) {
  const std::size_t d = run.model->d();
  if (critical) return gw::critical_tilt(*run.model);
  if (use_q) return gw::TiltVector(gw::extinction_vector(*run.model).q);
  if (a.empty()) return gw::TiltVector::uniform(d, 1.0);
  return gw::TiltVector(parse_vector(a, d));
}

void cmd_tilt(const Run& run, std::ostream& out, const gw::TiltVector& a) {
  const auto tilted = gw::associate(*run.model, a);
  const auto sp = gw::perron(tilted);
  gw::CsvWriter csv(out);
  csv.header({"type", "offspring", "p_bar", "a", "rho_bar"});
  for (std::size_t i = 0; i < tilted.d(); ++i)
    for (const auto& atom : tilted.law(i).atoms)
      csv.cell(i + 1).cell(atom.k).cell(atom.p).cell(a[i]).cell(sp.rho).end_row();
}

void cmd_qprocess(const Run& run, std::ostream& out, const gw::TiltVector& a, const gw::Box& box) {
  const auto q = gw::q_kernel(*run.model, a, box);
  gw::CsvWriter csv(out);
  csv.header({"from", "to", "Q", "row_sum", "row_overflow"});
  for (std::size_t from = 1; from < box.size(); ++from)
    for (const auto& e : q.row(from))
      csv.cell(box.state(from)).cell(box.state(e.to)).cell(e.p).cell(q.row_sum[from]).cell(q.raw_overflow[from]).end_row();
}

void cmd_yaglom(const Run& run, std::ostream& out, const gw::Box& box, const std::string& x0, int lag,
                bool scalars) {
  gw::YaglomOptions opts;
  if (!x0.empty()) opts.x0 = gw::parse_state(x0, run.model->d());
  gw::CsvWriter csv(out);
  if (lag >= 0) {
    const auto nu = gw::yaglom_type(*run.model, lag, box, opts);
    csv.header({"state", "nu_n"});
    for (std::size_t i = 1; i < box.size(); ++i)
      if (nu.mass[i] != 0.0) csv.cell(box.state(i)).cell(nu.mass[i]).end_row();
    return;
  }
  const auto y = gw::yaglom(*run.model, box, opts);
  if (scalars) {
    csv.header({"quantity", "index", "value"});
    csv.cell("rho").cell(0).cell(y.rho).end_row();
    csv.cell("gamma").cell(0).cell(y.gamma).end_row();
    csv.cell("route_gap_tv").cell(0).cell(y.route_gap_tv).end_row();
    csv.cell("overflow").cell(0).cell(y.nu.overflow).end_row();
    for (std::size_t i = 0; i < y.g_grad_at_1.size(); ++i) {
      csv.cell("g_grad_at_1").cell(i + 1).cell(y.g_grad_at_1[i]).end_row();
      csv.cell("v_over_gamma").cell(i + 1).cell(y.v[i] / y.gamma).end_row();
    }
    return;
  }
  csv.header({"state", "nu", "nu_eigen", "mu_bar", "pi"});
  for (std::size_t i = 1; i < box.size(); ++i)
    if (y.nu.mass[i] != 0.0 || y.nu_eigen.mass[i] != 0.0)
      csv.cell(box.state(i)).cell(y.nu.mass[i]).cell(y.nu_eigen.mass[i]).cell(y.mu_bar.mass[i]).cell(y.pi[i]).end_row();
}

void cmd_condition(const Run& run, std::ostream& out, const gw::Box& box, const std::string& x0,
                   const std::string& path, const std::string& set, const std::vector<int>& ns) {
  const std::size_t d = run.model->d();
  const auto ev = gw::parse_path(path, state_or_unit(x0, d));
  const auto s = gw::parse_set(set, d);
  const auto q = gw::extinction_vector(*run.model).q;
  const double rhs = gw::q_process_rhs(*run.model, gw::TiltVector(q), ev, box, run.leak_tol);
  gw::CsvWriter csv(out);
  csv.header({"n", "probability", "limit", "gap", "path_probability", "numerator", "denominator", "overflow",
              "hypothesis", "warnings"});
  for (int n : ns) {
    const auto r = gw::conditional_path_law(*run.model, ev, s, n, box, run.leak_tol);
    csv.cell(n).cell(r.probability).cell(rhs).cell(std::abs(r.probability - rhs)).cell(r.path_probability)
        .cell(r.numerator).cell(r.denominator).cell(r.overflow).cell(std::string_view(r.hypothesis))
        .cell(std::string_view(fmt::format("{}", fmt::join(r.warnings, "; ")))).end_row();
  }
}

void cmd_double_limit(const Run& run, std::ostream& out, const gw::Box& box, const std::string& x0,
                      const std::string& z, int m_max, const std::vector<double>& ts) {
  const std::size_t d = run.model->d();
  const auto sched = gw::default_double_limit_schedule(m_max, ts);
  const auto rows = gw::double_limit_scan(*run.model, state_or_unit(z, d), sched, box, state_or_unit(x0, d));
  gw::CsvWriter csv(out);
  csv.header({"schedule", "m", "k", "n", "probability", "mu_bar", "gap", "tv"});
  for (const auto& r : rows)
    csv.cell(std::string_view(r.schedule)).cell(r.m).cell(r.k).cell(r.n).cell(r.probability).cell(r.mu_bar)
        .cell(r.gap).cell(r.tv).end_row();
}

void cmd_nakaoka(const Run& run, std::ostream& out, const gw::Box& box, const std::string& x0, int n_max) {
  gw::NakaokaOptions opts;
  opts.x = state_or_unit(x0, run.model->d());
  const auto t = gw::nakaoka_diagnostics(*run.model, n_max, box, opts);
  gw::CsvWriter csv(out);
  csv.header({"n", "nak1", "nak2", "nak3", "pi_e1", "pi_gap", "rho", "x_dot_u", "overflow"});
  for (const auto& r : t.rows)
    csv.cell(r.n).cell(r.nak1).cell(r.nak2).cell(r.nak3).cell(r.pi_at.front()).cell(r.pi_gap).cell(t.rho)
        .cell(t.x_dot_u).cell(r.overflow).end_row();
  if (!t.note.empty()) std::cerr << t.note << '\n';
}

void cmd_progeny_pmf(const Run& run, std::ostream& out, const std::string& x0, const std::string& n,
                     const std::string& dp_cap) {
  const std::size_t d = run.model->d();
  const auto x = state_or_unit(x0, d);
  gw::CsvWriter csv(out);
  csv.header({"n", "probability", "method"});
  if (!dp_cap.empty()) {
    const auto table = gw::progeny_pmf_dp(*run.model, x, gw::parse_state(dp_cap, d));
    for (std::size_t i = 0; i < table.box.size(); ++i)
      csv.cell(table.box.state(i)).cell(table.mass[i]).cell("dp").end_row();
    return;
  }
  const auto target = gw::parse_state(n, d);
  csv.cell(target).cell(gw::progeny_pmf_formula(*run.model, x, target)).cell("formula").end_row();
}

void cmd_progeny_scaling(const Run& run, std::ostream& out, const std::string& x0, int from, int to, int step,
                         bool tilt_first) {
  const std::size_t d = run.model->d();
  const gw::BranchingModel model = tilt_first ? gw::associate(*run.model, gw::critical_tilt(*run.model)) : *run.model;
  std::vector<int> ns;
  for (int n = from; n <= to; n += std::max(step, 1)) ns.push_back(n);
  const auto rep = gw::proposition_scaling(model, state_or_unit(x0, d), ns);
  gw::CsvWriter csv(out);
  csv.header({"n", "target", "probability", "scaled", "plateau", "formula_constant"});
  for (const auto& r : rep.rows)
    csv.cell(r.n).cell(r.target).cell(r.probability).cell(r.scaled).cell(rep.plateau).cell(rep.formula_constant).end_row();
  for (const auto& note : rep.notes) std::cerr << note << '\n';
}

void cmd_progeny_theorem2(const Run& run, std::ostream& out, const gw::Box& box, const std::string& x0,
                          const std::string& path, const std::vector<int>& ns, const std::string& a) {
  const std::size_t d = run.model->d();
  const auto ev = gw::parse_path(path, state_or_unit(x0, d));
  std::optional<gw::TiltVector> tilt;
  if (!a.empty()) tilt = gw::TiltVector(parse_vector(a, d));
  const auto rep = gw::theorem2_verify(*run.model, ev, ns, box, tilt, run.leak_tol);
  gw::CsvWriter csv(out);
  csv.header({"n", "target", "probability", "limit", "gap"});
  for (const auto& r : rep.rows) csv.cell(r.n).cell(r.target).cell(r.probability).cell(r.limit).cell(r.gap).end_row();
  for (const auto& note : rep.notes) std::cerr << note << '\n';
}

void cmd_progeny_lemma1(const Run& run, std::ostream& out, const std::string& x0, const std::string& n,
                        const std::vector<std::string>& paths, const gw::TiltVector& a) {
  const std::size_t d = run.model->d();
  const auto x = state_or_unit(x0, d);
  std::vector<gw::PathEvent> evs;
  for (const auto& p : paths) evs.push_back(gw::parse_path(p, x));
  const auto res = gw::lemma1_check(*run.model, a, x, evs, gw::parse_state(n, d));
  gw::CsvWriter csv(out);
  csv.header({"path", "original", "tilted", "discrepancy"});
  for (std::size_t i = 0; i < evs.size(); ++i)
    csv.cell(std::string_view(paths[i])).cell(res.original[i]).cell(res.tilted[i])
        .cell(std::abs(res.original[i] - res.tilted[i])).end_row();
}

void cmd_mc(const Run& run, std::ostream& out, const gw::SimConfig& cfg, const std::string& x0,
            const std::string& path, const std::string& set, int lag, const std::string& progeny) {
  const std::size_t d = run.model->d();
  const auto ev = gw::parse_path(path, state_or_unit(x0, d));
  gw::McCondition cond = gw::McCondition::always();
  if (!set.empty() && !progeny.empty()) throw gw::ValidationError("use either --set or --progeny, not both");
  if (!set.empty()) cond = gw::McCondition::in_set(gw::parse_set(set, d), lag);
  if (!progeny.empty()) cond = gw::McCondition::total_progeny(gw::parse_state(progeny, d));
  const auto est = gw::conditioned_estimate(*run.model, ev, cond, cfg);
  gw::CsvWriter csv(out);
  csv.header({"estimate", "std_error", "n_effective", "replicates", "censored", "capped_survivals"});
  csv.cell(est.estimate).cell(est.std_error).cell(est.effective).cell(est.replicates).cell(est.censored)
      .cell(est.capped_survivals).end_row();
}

void report_error(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  Run run;
  for (int i = 0; i < argc; ++i) run.command_line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"Exact laboratory for multitype Galton-Watson processes"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.add_option("-o,--out", run.out_path, "Write the table to this file (manifest goes to <out>.manifest.json)");
  app.add_option("--threads", run.threads, "Worker cap (default: GW_THREADS or all cores)");
  app.add_option("--leak-tol", run.leak_tol, "Largest mass allowed to leave the box in condition and theorem2 runs")
      ->check(CLI::PositiveNumber);

  std::function<void(std::ostream&)> action;
  std::vector<int> caps{60};
  std::string x0, path, set, z, a, n_text, dp_cap, progeny;
  std::vector<int> ns{10, 20, 40};
  std::vector<double> ts{0.25, 0.5, 0.75};
  std::vector<std::string> paths;
  int n_max = 0, m_max = 25, lag = -1, mc_lag = 0, from = 50, to = 400, step = 50;
  bool critical = false, use_q = false, scalars = false, tilt_first = false;
  gw::SimConfig sim;

  auto with_model = [&](CLI::App* sub) {
    sub->add_option("model", run.model_path, "Model JSON file")->required()->check(CLI::ExistingFile);
  };
  auto with_box = [&](CLI::App* sub) {
    sub->add_option("--cap", caps, "Truncation box caps (one value for a cube)")->expected(1, -1);
  };
  auto with_tilt = [&](CLI::App* sub) {
    sub->add_option("--a", a, "Tilt vector (one value for a uniform tilt)");
    sub->add_flag("--critical", critical, "Use the critical tilt");
    sub->add_flag("--q", use_q, "Tilt by the extinction vector");
  };

  auto* validate = app.add_subcommand("validate", "Model diagnostics as JSON");
  with_model(validate);
  validate->callback([&] { action = [&](std::ostream& o) { cmd_validate(run, o); }; });

  auto* spectral = app.add_subcommand("spectral", "Perron root and eigenvectors");
  with_model(spectral);
  spectral->add_option("--power-gaps", n_max, "Also report max |rho^-n M^n - u v| for n = 1..N");
  spectral->callback([&] { action = [&](std::ostream& o) { cmd_spectral(run, o, n_max); }; });

  auto* extinction = app.add_subcommand("extinction", "Extinction probability vector q");
  with_model(extinction);
  extinction->callback([&] { action = [&](std::ostream& o) { cmd_extinction(run, o); }; });

  auto* tilt = app.add_subcommand("tilt", "Associated process for a tilt");
  with_model(tilt);
  with_tilt(tilt);
  tilt->callback([&] {
    action = [&](std::ostream& o) { cmd_tilt(run, o, tilt_from(run, a, critical, use_q)); };
  });

  auto* qprocess = app.add_subcommand("qprocess", "Q-process kernel on a box");
  with_model(qprocess);
  with_box(qprocess);
  with_tilt(qprocess);
  qprocess->callback([&] {
    action = [&](std::ostream& o) {
      cmd_qprocess(run, o, tilt_from(run, a, critical, use_q), box_for(caps, run.model->d()));
    };
  });

  auto* yaglom = app.add_subcommand("yaglom", "Yaglom limit (or Yaglom-type limit with --lag)");
  with_model(yaglom);
  with_box(yaglom);
  yaglom->add_option("--x0", x0, "Initial state, e.g. (1,0)");
  yaglom->add_option("--lag", lag, "Compute the limit conditioned on survival n steps further");
  yaglom->add_flag("--scalars", scalars, "Print gamma, route gap and gradient instead of the table");
  yaglom->callback([&] {
    action = [&](std::ostream& o) { cmd_yaglom(run, o, box_for(caps, run.model->d()), x0, lag, scalars); };
  });

  auto* condition = app.add_subcommand("condition", "Path law conditioned on X_{k_j+n} in S and T < inf");
  with_model(condition);
  with_box(condition);
  condition->add_option("--x0", x0, "Initial state");
  condition->add_option("--path", path, "Observations, e.g. 1:(1,1);2:(0,2)")->required();
  condition->add_option("--set", set, "finite:[...], cofinite:[...], norm=m, norm>=m, nonextinct")->required();
  condition->add_option("--n", ns, "Lags n")->expected(1, -1);
  condition->callback([&] {
    action = [&](std::ostream& o) { cmd_condition(run, o, box_for(caps, run.model->d()), x0, path, set, ns); };
  });

  auto* dlimit = app.add_subcommand("double-limit", "Gap to the size-biased Yaglom law as k, n grow");
  with_model(dlimit);
  with_box(dlimit);
  dlimit->add_option("--x0", x0, "Initial state");
  dlimit->add_option("--z", z, "Target state (default e_1)");
  dlimit->add_option("--m-max", m_max, "Largest horizon");
  dlimit->add_option("--t", ts, "Fractions t for k = floor(m t)")->expected(0, -1);
  dlimit->callback([&] {
    action = [&](std::ostream& o) { cmd_double_limit(run, o, box_for(caps, run.model->d()), x0, z, m_max, ts); };
  });

  auto* nakaoka = app.add_subcommand("nakaoka", "Ratio diagnostics for rho <= 1");
  with_model(nakaoka);
  with_box(nakaoka);
  nakaoka->add_option("--x0", x0, "Initial state");
  nakaoka->add_option("--n-max", n_max, "Largest n (default 60)");
  nakaoka->callback([&] {
    if (n_max == 0) n_max = 60;
    action = [&](std::ostream& o) { cmd_nakaoka(run, o, box_for(caps, run.model->d()), x0, n_max); };
  });

  auto* prog = app.add_subcommand("progeny", "Total-progeny computations");
  prog->require_subcommand(1);
  auto* pmf = prog->add_subcommand("pmf", "P_{x0}(N = n)");
  with_model(pmf);
  pmf->add_option("--x0", x0, "Initial state");
  pmf->add_option("--n", n_text, "Target progeny vector");
  pmf->add_option("--dp-cap", dp_cap, "Print the whole table up to this cap from the dynamic programme");
  pmf->callback([&] {
    if (n_text.empty() && dp_cap.empty()) throw CLI::ValidationError("--n or --dp-cap is required");
    action = [&](std::ostream& o) { cmd_progeny_pmf(run, o, x0, n_text, dp_cap); };
  });
  auto* scaling = prog->add_subcommand("scaling", "n^{d/2+1} P_{x0}(N = floor(n v)) for a critical model");
  with_model(scaling);
  scaling->add_option("--x0", x0, "Initial state");
  scaling->add_option("--from", from, "Smallest n");
  scaling->add_option("--to", to, "Largest n");
  scaling->add_option("--step", step, "Step in n");
  scaling->add_flag("--tilt", tilt_first, "Replace the model by its critical tilt first");
  scaling->callback([&] {
    action = [&](std::ostream& o) { cmd_progeny_scaling(run, o, x0, from, to, step, tilt_first); };
  });
  auto* theorem2 = prog->add_subcommand("theorem2", "Path law given N = floor(n v_bar) against its limit");
  with_model(theorem2);
  with_box(theorem2);
  theorem2->add_option("--x0", x0, "Initial state");
  theorem2->add_option("--path", path, "Observations")->required();
  theorem2->add_option("--n", ns, "Values of n")->expected(1, -1);
  theorem2->add_option("--a", a, "Tilt (default: critical tilt)");
  theorem2->callback([&] {
    action = [&](std::ostream& o) {
      cmd_progeny_theorem2(run, o, box_for(caps, run.model->d()), x0, path, ns, a);
    };
  });
  auto* lemma1 = prog->add_subcommand("lemma1", "Tilt invariance of the progeny-conditioned law");
  with_model(lemma1);
  with_tilt(lemma1);
  lemma1->add_option("--x0", x0, "Initial state");
  lemma1->add_option("--n", n_text, "Target progeny vector")->required();
  lemma1->add_option("--path", paths, "Observations (repeatable)")->required();
  lemma1->callback([&] {
    action = [&](std::ostream& o) {
      cmd_progeny_lemma1(run, o, x0, n_text, paths, tilt_from(run, a, critical, use_q));
    };
  });

  auto* mc = app.add_subcommand("mc", "Rejection Monte Carlo estimate of a conditioned path law");
  with_model(mc);
  mc->add_option("--x0", x0, "Initial state");
  mc->add_option("--path", path, "Observations")->required();
  mc->add_option("--set", set, "Condition X_{k_j+lag} in S (and T < inf)");
  mc->add_option("--lag", mc_lag, "Lag for --set");
  mc->add_option("--progeny", progeny, "Condition N = n");
  mc->add_option("--seed", sim.seed, "Seed");
  mc->add_option("--reps", sim.replicates, "Replicates");
  mc->add_option("--pop-cap", sim.population_cap, "Population cap");
  mc->callback([&] {
    action = [&](std::ostream& o) {
      sim.threads = run.threads;
      run.seeds["seed"] = sim.seed;
      run.seeds["replicates"] = sim.replicates;
      cmd_mc(run, o, sim, x0, path, set, mc_lag, progeny);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  } catch (const gw::Error& e) {
    report_error(e.kind(), e.what());
    return e.exit_code();
  }

  try {
    if (!run.model_path.empty()) run.model = gw::load_model(run.model_path);
    run.tolerances = {{"leak", run.leak_tol},
                      {"criticality", gw::kCriticalityTolerance},
                      {"mass", gw::BranchingModel::kMassTolerance},
                      {"yaglom_tv", gw::YaglomOptions{}.tv_tolerance},
                      {"yaglom_routes", gw::YaglomOptions{}.route_tolerance},
                      {"perron", gw::PerronOptions{}.tolerance},
                      {"extinction", gw::ExtinctionOptions{}.tolerance},
                      {"critical_tilt", gw::CriticalTiltOptions{}.tolerance}};
    std::ostringstream buffer;
    action(buffer);
    if (run.out_path.empty()) {
      std::cout << buffer.str();
    } else {
      std::ofstream out(run.out_path);
      if (!out) throw gw::Error(fmt::format("cannot write '{}'", run.out_path));
      out << buffer.str();
    }
    write_manifest(run);
    return 0;
  } catch (const gw::Error& e) {
    report_error(e.kind(), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    report_error("error", e.what());
    return 1;
  }
}

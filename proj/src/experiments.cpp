#include "kkindex/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace kkindex {

namespace {

constexpr double exact_tol = 1e-12;

std::string trunc(int N, int E) { return "N=" + std::to_string(N) + " E=" + std::to_string(E); }
std::string trunc(const TruncationSpec& s) { return trunc(s.max_mode, s.max_energy); }

struct Rows {
  std::vector<ReportRow>& out;
  void at_most(std::string q, std::string t, double measured, double bound, double tol) {
    out.push_back({std::move(q), std::move(t), measured, bound, tol, CheckKind::at_most});
  }
  void at_least(std::string q, std::string t, double measured, double bound, double tol) {
    out.push_back({std::move(q), std::move(t), measured, bound, tol, CheckKind::at_least});
  }
  void equals(std::string q, std::string t, double measured, double expected, double tol) {
    out.push_back({std::move(q), std::move(t), measured, expected, tol, CheckKind::equals});
  }
};

GroupPtr parse_group(const std::string& text) {
  return std::make_shared<const FiniteAbelianGroup>(FiniteAbelianGroup::parse(text));
}

GSetPtr translation_of(const GroupPtr& g) { return std::make_shared<const GSet>(GSet::translation(g)); }

double max_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

std::vector<Complex> random_values(std::size_t n, SeededRng& rng) {
  std::vector<Complex> v(n);
  for (auto& x : v) x = rng.complex();
  return v;
}

CVector random_cvector(Eigen::Index n, SeededRng& rng) {
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex();
  return v;
}

std::string case_label(const Cocycle& tau) {
  return "G=" + tau.group()->name() + " m=" + std::to_string(tau.root_order());
}

// Standard group models plus the configured one when it is not among them.
std::vector<Cocycle> group_models(const Config& cfg) {
  std::vector<Cocycle> out;
  bool present = false;
  for (const auto& c : standard_group_cases()) {
    out.push_back(make_group_cocycle(c));
    present = present || (c.group == cfg.group && c.cocycle == cfg.cocycle && cfg.root_order == 0);
  }
  if (!present) out.push_back(cfg.make_cocycle());
  return out;
}

// -------------------------------------------------------------- experiments

ExperimentReport exp_ccr_car(const Config& cfg) {
  ExperimentReport rep{"ccr_car", {}, {}};
  Rows rows{rep.rows};
  for (int N = 1; N <= cfg.modes; ++N) {
    TruncationSpec s{N, cfg.energy_cut};
    CcrCarResult r = ccr_car_suite(s);
    rows.equals("boson CCR residual", trunc(s), r.boson_ccr, 0.0, exact_tol);
    rows.equals("dual CCR residual", trunc(s), r.dual_ccr, 0.0, exact_tol);
    rows.equals("CAR residual on safe columns", trunc(s), r.car_safe, 0.0, exact_tol);
    rows.equals("CAR residual on closed exterior algebra", trunc(N, N * (N + 1) / 2), r.car_full, 0.0, exact_tol);
    rows.equals("energy ladder identity residual", trunc(s), r.energy_identity, 0.0, exact_tol);
    rows.equals("number Clifford identity residual", trunc(s), r.number_identity, 0.0, exact_tol);
  }
  return rep;
}

ExperimentReport exp_weitzenbock(const Config& cfg) {
  ExperimentReport rep{"weitzenbock", {}, {}};
  Rows rows{rep.rows};
  const TruncationSpec s = cfg.spec();
  rows.equals("square minus 2(N + energy/i), joint cut", trunc(s), weitzenbock_residual(s, SpectatorCut::joint), 0.0,
              exact_tol);
  rows.equals("square minus 2(N + energy/i), independent cut", trunc(s),
              weitzenbock_residual(s, SpectatorCut::independent), 0.0, exact_tol);
  auto report = square_spectrum_report(build_dirac_R(s));
  std::size_t mismatches = 0;
  std::ostringstream csv;
  csv << "eigenvalue,multiplicity,predicted,match\n";
  for (const auto& row : report) {
    mismatches += !row.match;
    csv << format_number(row.eigenvalue) << ',' << row.multiplicity << ',' << row.predicted << ','
        << (row.match ? 1 : 0) << '\n';
  }
  rows.equals("square spectrum multiplicity mismatches", trunc(s), static_cast<double>(mismatches), 0.0, 0.0);
  rep.files.push_back({"weitzenbock_spectrum.csv", csv.str()});
  return rep;
}

ExperimentReport exp_kernel_count(const Config& cfg) {
  ExperimentReport rep{"kernel_count", {}, {}};
  Rows rows{rep.rows};
  KernelResult ref = kernel_suite({3, 4});
  rows.equals("kernel dimension", trunc(3, 4), static_cast<double>(ref.dimension), 11.0, 0.0);
  for (int N = 1; N <= cfg.modes; ++N)
    for (int E : {cfg.energy_cut / 2, cfg.energy_cut}) {
      if (E < 1 || (N == 3 && E == 4)) continue;
      KernelResult r = kernel_suite({N, E});
      rows.equals("kernel dimension vs partition count", trunc(N, E), static_cast<double>(r.dimension),
                  static_cast<double>(r.predicted), 0.0);
      rows.equals("kernel weight off boson (x) vacuum (x) 1_f", trunc(N, E), r.off_vacuum, 0.0, exact_tol);
    }
  return rep;
}

ExperimentReport exp_per_estimate(const Config& cfg) {
  ExperimentReport rep{"per_estimate", {}, {}};
  Rows rows{rep.rows};
  const int window = 12;  // lambda^2 <= 24
  for (int n = 1; n <= std::min(cfg.modes, 4); ++n) {
    TruncationSpec s{cfg.modes, window};
    EstimateReport r = per_estimate(s, n);
    const std::string t = trunc(s) + " n=" + std::to_string(n);
    rows.equals("estimate violations", t, static_cast<double>(r.violations), 0.0, 0.0);
    rows.equals("single-mode dual monomials tested", t, static_cast<double>(r.equality_states),
                static_cast<double>(window / n), 0.0);
    rows.equals("equality defect on single-mode monomials", t, r.equality_defect, 0.0, exact_tol);
  }
  return rep;
}

ExperimentReport exp_xi_norms(const Config& cfg) {
  ExperimentReport rep{"xi_norms", {}, {}};
  Rows rows{rep.rows};
  std::vector<double> sigmas{1.0, 0.5, 0.125};
  for (int n = 1; n <= cfg.active_modes; ++n) {
    double s = cfg.sigma(n);
    if (std::find(sigmas.begin(), sigmas.end(), s) == sigmas.end()) sigmas.push_back(s);
  }
  for (double s : sigmas) {
    XiDerivativeNorm r = dRz_norm_on_xi(s);
    const std::string t = "sigma=" + format_number(s);
    rows.equals("position quadrature vs sigma/2", t, r.position, s / 2, 1e-6);
    rows.equals("momentum quadrature vs sigma/2", t, r.momentum, s / 2, 1e-6);
    rows.equals("position vs momentum", t, r.position, r.momentum, 1e-6);
    rows.at_most("Hermite truncation norm at most sigma", t + " cut=" + std::to_string(r.hermite_cut), r.hermite, s,
                 0.0);
    rows.at_most("momentum norm at most sigma", t, r.momentum, s, 0.0);
  }
  return rep;
}

ExperimentReport exp_sigma_tails(const Config& cfg) {
  ExperimentReport rep{"sigma_tails", {}, {}};
  Rows rows{rep.rows};
  std::ostringstream csv;
  csv << "M,bound,measured\n";
  const SigmaSequence& seq = cfg.sigma;
  const std::string rule = "sigma=" + seq.describe();
  std::vector<TailRow> table;
  if (seq.has_tail_rule()) {
    table = tail_table(3, 8, seq);
  } else {
    for (int M = 3; M <= 8 && M < static_cast<int>(seq.values.size()); ++M) {
      double b = 0.0;
      for (std::size_t n = static_cast<std::size_t>(M) + 1; n <= seq.values.size(); ++n)
        b += 2.0 * std::sqrt(2.0 * static_cast<double>(n)) * seq.values[n - 1];
      table.push_back({M, b, frozen_tail_norm(M, seq)});
    }
  }
  for (const auto& row : table) {
    rows.at_most("frozen tail norm below tail bound", rule + " M=" + std::to_string(row.M), row.measured, row.bound,
                 0.0);
    csv << row.M << ',' << format_number(row.bound) << ',' << format_number(row.measured) << '\n';
  }
  if (seq.has_tail_rule()) {
    double oracle = 0.0;
    std::string method;
    if (seq.rule == SigmaSequence::Rule::power) {
      // 2 sqrt(2) c sum_{n>5} n^-s with s = p - 1/2, through the zeta function
      const double s = seq.exponent - 0.5;
      oracle = std::riemann_zeta(s);
      for (int n = 1; n <= 5; ++n) oracle -= std::pow(static_cast<double>(n), -s);
      oracle *= 2.0 * std::sqrt(2.0) * seq.scale;
      method = "zeta";
    } else {
      // partial sums summed from the far end
      int last = 6;
      while (2.0 * std::sqrt(2.0 * last) * seq(last) > 1e-20) ++last;
      for (int n = last; n >= 6; --n) oracle += 2.0 * std::sqrt(2.0 * n) * seq(n);
      method = "reversed partial sum";
    }
    rows.equals("tail bound at M=5 vs " + method, rule + " M=5", tail_bound(5, seq), oracle,
                1e-10 * std::max(1.0, oracle));
    if (seq.describe() == "pow2") rows.equals("tail bound at M=5 (pow2)", rule + " M=5", tail_bound(5, seq), 0.233, 5e-4);
  }
  rep.files.push_back({"sigma_tails_table.csv", csv.str()});
  return rep;
}

ExperimentReport exp_fingroup_suite(const Config& cfg) {
  ExperimentReport rep{"fingroup_suite", {}, {}};
  Rows rows{rep.rows};
  SeededRng rng(cfg.seed);
  for (const Cocycle& tau : group_models(cfg)) {
    FinGroupResult r = fingroup_suite(tau, rng);
    const std::string t = case_label(tau);
    const double order = static_cast<double>(tau.group()->order());
    rows.equals("cocycle identity violations", t, static_cast<double>(r.cocycle_violations), 0.0, 0.0);
    rows.equals("extension associativity failures", t, r.extension_associativity, 0.0, 0.0);
    rows.equals("products of different levels", t, r.level_orthogonality, 0.0, exact_tol);
    rows.equals("level decomposition completeness", t, r.level_completeness, 0.0, exact_tol);
    rows.equals("schatten map multiplicativity on deltas", t, r.schatten_multiplicativity, 0.0, exact_tol);
    rows.equals("schatten map star compatibility on deltas", t, r.schatten_star, 0.0, exact_tol);
    rows.equals("mishchenko idempotent defect", t, r.mishchenko_idempotent, 0.0, exact_tol);
    rows.equals("mishchenko image vs rank-one sqrt(c)", t, r.mishchenko_rank_one, 0.0, exact_tol);
    double sq = 0.0;
    for (int d : r.blocks) sq += static_cast<double>(d) * d;
    rows.equals("sum of squared block dimensions", t, sq, order, 0.0);
    rows.equals("center dimension vs commuting elements", t, static_cast<double>(r.center_dimension),
                static_cast<double>(r.commuting_elements), 0.0);
    const auto& mod = tau.group()->moduli();
    if (mod.size() == 2 && mod[0] == mod[1] && tau.root_order() == mod[0] && r.commuting_elements == 1) {
      rows.equals("block count (single block)", t, static_cast<double>(r.blocks.size()), 1.0, 0.0);
      rows.equals("block dimension", t, r.blocks.empty() ? 0.0 : r.blocks.front(), mod[0], 0.0);
    }
  }
  {
    SeededRng mrng(cfg.seed + 1);
    auto tau = Cocycle::carry(parse_group("3"));
    MIsoResult m = m_iso_trials(tau, 100, mrng);
    const std::string t = case_label(tau) + " trials=100";
    rows.equals("m-iso isometry defect", t, m.isometry, 0.0, cfg.tolerance);
    rows.equals("m-iso right module defect", t, m.right_module, 0.0, cfg.tolerance);
    rows.equals("m-iso left module defect", t, m.left_module, 0.0, cfg.tolerance);
    rows.equals("m-iso output level failures", t, m.levels_ok ? 0.0 : 1.0, 0.0, 0.0);
  }
  {
    SeededRng trng(cfg.seed + 2);
    auto ext = make_extension(cfg.make_cocycle());
    auto f = level_project(GroupAlgebraElement::random(ext, trng), 1);
    std::ostringstream csv;
    write_table_csv(csv, f);
    rep.files.push_back({"fingroup_table.csv", csv.str()});
  }
  return rep;
}

ExperimentReport exp_level_suite(const Config& cfg) {
  ExperimentReport rep{"level_suite", {}, {}};
  Rows rows{rep.rows};
  for (const Cocycle& tau : group_models(cfg)) {
    const std::string t = case_label(tau);
    const double order = static_cast<double>(tau.group()->order());
    for (const auto& row : level_compression(tau)) {
      const std::string tk = t + " k=" + std::to_string(row.level);
      rows.equals("Mishchenko vector level part norm", tk, row.compression, row.level == 0 ? 1.0 : 0.0, exact_tol);
      rows.equals("pulled-back Mishchenko level part", tk, row.crossed_projection, row.level == 0 ? 1.0 / order : 0.0,
                  exact_tol);
    }
  }
  // module level bookkeeping on the configured group
  auto ext = make_extension(cfg.make_cocycle());
  const int m = ext->root_order();
  const std::size_t n = ext->size();
  SeededRng rng(cfg.seed + 3);
  TwistedModuleElement raw{ext, random_values(n * n, rng)}, raw2{ext, random_values(n * n, rng)};
  auto project_x = [&](const TwistedModuleElement& phi, int k) {
    TwistedModuleElement out{ext, std::vector<Complex>(n * n, 0.0)};
    for (std::size_t x = 0; x < n; ++x)
      for (int z = 0; z < m; ++z) {
        Complex w = root_of_unity(m, -static_cast<long long>(z) * k) / static_cast<double>(m);
        std::size_t zx = ext->mul(ext->central(z), x);
        for (std::size_t g = 0; g < n; ++g) out.values[x * n + g] += w * phi.at(zx, g);
      }
    return out;
  };
  auto alg = TwistedCrossedElement::random(ext, rng);
  auto b = GroupAlgebraElement::random(ext, rng);
  double mismatched_left = 0.0, mismatched_right = 0.0, mismatched_inner = 0.0;
  std::size_t level_failures = 0;
  for (int kx = 0; kx < m; ++kx)
    for (int kg = 0; kg < m; ++kg) {
      auto phi = level_project_g(project_x(raw, kx), kg);
      level_failures += !phi.is_level(kx, kg);
      for (int ka = 0; ka < m; ++ka)
        if (((ka - kx - kg) % m + m) % m != 0)
          mismatched_left = std::max(mismatched_left, module_left(level_project(alg, ka), phi).max_abs());
      for (int kb = 0; kb < m; ++kb)
        if (kb != kg) mismatched_right = std::max(mismatched_right, module_right(phi, level_project(b, kb)).max_abs());
      for (int ky = 0; ky < m; ++ky)
        if (ky != kx) mismatched_inner = std::max(mismatched_inner, module_inner(phi, project_x(raw2, ky)).max_abs());
    }
  const std::string t = case_label(cfg.make_cocycle());
  rows.equals("module level tag failures", t, static_cast<double>(level_failures), 0.0, 0.0);
  rows.equals("left action across mismatched levels", t, mismatched_left, 0.0, exact_tol);
  rows.equals("right action across mismatched levels", t, mismatched_right, 0.0, exact_tol);
  rows.equals("inner product across mismatched levels", t, mismatched_inner, 0.0, exact_tol);
  return rep;
}

struct SmallCycle {
  TruncationSpec spec;
  int active;
  int cut;
  std::string label() const {
    return trunc(spec) + " M=" + std::to_string(active) + " cut=" + std::to_string(cut);
  }
};

SmallCycle small_cycle(const Config& cfg, int max_cut) {
  TruncationSpec s{std::min(cfg.modes, 2), std::min(cfg.energy_cut, 4)};
  return {s, std::min(cfg.active_modes, s.max_mode), std::min(cfg.hermite_cut, max_cut)};
}

ExperimentReport exp_jcycle_diag(const Config& cfg) {
  ExperimentReport rep{"jcycle_diag", {}, {}};
  Rows rows{rep.rows};
  SeededRng rng(cfg.seed + 4);
  {
    SmallCycle sc = small_cycle(cfg, 3);
    JCycle c = build_j_cycle(sc.spec, sc.active, cfg.sigma, sc.cut);
    MaterializedJCycle m = materialize(c, 200000);
    rows.equals("self-adjoint defect of the explicit cycle", sc.label(), self_adjoint_defect(m.op), 0.0, exact_tol);
  }
  {
    SmallCycle sc = small_cycle(cfg, 6);
    JCycle c = build_j_cycle(sc.spec, sc.active, cfg.sigma, sc.cut);
    CVector xi = xi_prefix(c);
    CommutatorReport r = commutator_bound({{xi, xi}}, c);
    rows.at_most("commutator with the Xi projection vs analytic bound", sc.label(), r.measured, r.analytic, 1e-12);
    rows.at_most("commutator bound plus frozen tail stays finite", sc.label(), r.analytic + r.tail, 1e6, 0.0);
    for (const auto& row : cross_term_bounds(c))
      rows.at_most("cross term norm vs n sigma_n bound", sc.label() + " n=" + std::to_string(row.mode), row.measured,
                   row.bound, 1e-12);
  }
  {
    TruncationSpec s{std::min(cfg.modes, 2), std::min(cfg.energy_cut, 2)};
    JCycle c = build_j_cycle(s, 1, cfg.sigma, std::min(cfg.hermite_cut, 3));
    const std::string t = trunc(s) + " M=1 cut=" + std::to_string(std::min(cfg.hermite_cut, 3));
    const auto P = static_cast<Eigen::Index>(c.prefix_dimension());
    const std::size_t S = c.left.space.basis()->size();
    std::vector<RankOneTerm> a{{xi_prefix(c), xi_prefix(c)}, {random_cvector(P, rng), random_cvector(P, rng)}};
    ResolventReport r = resolvent_compactness(a, c, {1, S, 2 * S});
    rows.equals("resolvent singular value decay violations", t, static_cast<double>(r.decay_violations), 0.0, 0.0);
    rows.equals("best approximation error at full rank", t, r.rank_errors.back(), 0.0, 0.0);
    rows.at_most("rank-S error below rank-1 error", t, r.rank_errors[1], r.rank_errors[0], 0.0);
    rows.equals("square split residual on safe columns", t, r.split_residual, 0.0, exact_tol);
  }
  return rep;
}

ExperimentReport exp_assembly_compare(const Config& cfg) {
  ExperimentReport rep{"assembly_compare", {}, {}};
  Rows rows{rep.rows};
  const TruncationSpec s = cfg.spec();
  const int M = std::min(cfg.active_modes, cfg.modes);
  JCycle c = build_j_cycle(s, M, cfg.sigma, cfg.hermite_cut);
  AssemblyResult a = assemble(c);
  const std::string t = trunc(s) + " M=" + std::to_string(M) + " sigma=" + cfg.sigma.describe();
  rows.equals("assembled operator minus left Dirac operator", t, (a.cycle.op - c.left.op).max_abs(), 0.0, cfg.tolerance);
  rows.equals("largest compressed Hermite scalar", t, a.max_scalar, 0.0, cfg.tolerance);
  rows.equals("compressed module dimension", t, static_cast<double>(a.module_dimension),
              static_cast<double>(c.left.space.basis()->size()), 0.0);
  {
    SmallCycle sc = small_cycle(cfg, 2);
    JCycle small = build_j_cycle(sc.spec, sc.active, cfg.sigma, sc.cut);
    MaterializedJCycle m = materialize(small, 200000);
    rows.equals("explicit compression vs per-mode assembly", sc.label(),
                (compress_materialized(small, m) - assemble(small).cycle.op).max_abs(), 0.0, exact_tol);
  }
  for (const Cocycle& tau : group_models(cfg)) {
    FiniteAssemblyReport r = finite_assembly(tau);
    const std::string ft = case_label(tau);
    rows.equals("finite compression minus left operator", ft, r.compression_residual, 0.0, exact_tol);
    rows.equals("finite compressed spectrum vs left operator", ft, r.spectrum_difference, 0.0, 1e-8);
    rows.equals("finite analytic vs left spectrum", ft, r.analytic_spectrum_difference, 0.0, 1e-8);
    rows.equals("finite transpose intertwining", ft, r.intertwining, 0.0, exact_tol);
    rows.equals("finite Mishchenko image vs rank-one", ft, r.projection_defect, 0.0, exact_tol);
    rows.equals("finite Clifford relations", ft, r.clifford_defect, 0.0, exact_tol);
    rows.equals("finite self-adjoint defect", ft, r.self_adjoint_defect, 0.0, exact_tol);
  }
  return rep;
}

ExperimentReport exp_index_compare(const Config& cfg) {
  ExperimentReport rep{"index_compare", {}, {}};
  Rows rows{rep.rows};
  SeededRng rng(cfg.seed + 5);
  std::vector<std::pair<TruncationSpec, SpectatorCut>> cases;
  for (int N = 1; N <= cfg.modes; ++N)
    for (int E : {cfg.energy_cut / 2, cfg.energy_cut})
      if (E >= 1) cases.push_back({{N, E}, SpectatorCut::independent});
  cases.push_back({cfg.spec(), SpectatorCut::joint});
  for (const auto& [s, cut] : cases) {
    IndexComparison r = compare_indices(analytic_index(s, cut), kk_index(s, cut), rng);
    const std::string t = trunc(s) + (cut == SpectatorCut::joint ? " joint" : " independent");
    rows.equals("transpose intertwining", t, r.intertwining, 0.0, cfg.tolerance);
    rows.equals("intertwiner unitarity", t, r.unitarity, 0.0, exact_tol);
    rows.equals("spectrum multiset difference", t, r.spectrum_difference, 0.0, cfg.tolerance);
    rows.equals("bounded transform difference", t, r.bounded_difference, 0.0, cfg.tolerance);
    rows.equals("kernel dimensions", t, static_cast<double>(r.kk_kernel), static_cast<double>(r.analytic_kernel), 0.0);
    rows.equals("vacuum columns to vacuum columns", t, r.vacuum_defect, 0.0, 0.0);
    if (r.module_checked) {
      rows.equals("right action intertwining", t, r.action_defect, 0.0, exact_tol);
      rows.equals("inner product intertwining", t, r.inner_defect, 0.0, exact_tol);
      rows.equals("operator commutes with the right action", t, r.operator_module_defect, 0.0, exact_tol);
    }
  }
  TruncationSpec small{std::min(cfg.modes, 2), std::min(cfg.energy_cut, 4)};
  for (auto side : {IndexSide::analytic, IndexSide::kk}) {
    IndexCycle c = side == IndexSide::kk ? kk_index(small) : analytic_index(small);
    ModuleAxioms ax = check_module_axioms(c, rng);
    const std::string t = trunc(small) + (side == IndexSide::kk ? " kk" : " analytic");
    rows.equals("module associativity", t, ax.associativity, 0.0, exact_tol);
    rows.equals("inner product compatibility", t, ax.compatibility, 0.0, exact_tol);
    rows.equals("inner product hermitian", t, ax.hermitian, 0.0, exact_tol);
    rows.at_least("inner product positivity", t, ax.min_eigenvalue, 0.0, exact_tol);
  }
  return rep;
}

ExperimentReport exp_kucerovsky(const Config& cfg) {
  ExperimentReport rep{"kucerovsky", {}, {}};
  Rows rows{rep.rows};
  SeededRng rng(cfg.seed + 6);
  SmallCycle sc = small_cycle(cfg, 6);
  JCycle c = build_j_cycle(sc.spec, sc.active, cfg.sigma, sc.cut);
  const auto P = static_cast<Eigen::Index>(c.prefix_dimension());
  CVector random = random_cvector(P, rng);
  random /= random.norm();
  KucerovskyReport r = kucerovsky_check(c, {xi_prefix(c), CVector::Zero(P), random});
  const char* names[] = {"Xi", "zero", "random unit"};
  for (std::size_t i = 0; i < r.commutator_norms.size(); ++i)
    rows.at_most(std::string("commutator norm vs bound, generator ") + names[i], sc.label(), r.commutator_norms[i],
                 r.commutator_bounds[i], 1e-8);
  rows.equals("commutator norm of the zero generator", sc.label(), r.commutator_norms[1], 0.0, 0.0);
  rows.at_least("positivity form minimum", sc.label(), r.positivity_min, 0.0, 1e-8);
  return rep;
}

// Quotes a text field when it holds a comma, quote or line break.
std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

using Runner = std::function<ExperimentReport(const Config&)>;

const std::vector<std::pair<std::string, Runner>>& registry() {
  static const std::vector<std::pair<std::string, Runner>> r{
      {"ccr_car", exp_ccr_car},           {"weitzenbock", exp_weitzenbock},
      {"kernel_count", exp_kernel_count}, {"per_estimate", exp_per_estimate},
      {"xi_norms", exp_xi_norms},         {"sigma_tails", exp_sigma_tails},
      {"fingroup_suite", exp_fingroup_suite}, {"level_suite", exp_level_suite},
      {"jcycle_diag", exp_jcycle_diag},   {"assembly_compare", exp_assembly_compare},
      {"index_compare", exp_index_compare}, {"kucerovsky", exp_kucerovsky}};
  return r;
}

}  // namespace

double ReportRow::margin() const {
  switch (kind) {
    case CheckKind::at_most:
      return reference - measured;
    case CheckKind::at_least:
      return measured - reference;
    case CheckKind::equals:
      break;
  }
  return -std::abs(measured - reference);
}

std::size_t ExperimentReport::failures() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.pass(); }));
}

const std::vector<std::string>& experiment_registry() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, run] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

bool is_registered(const std::string& name) {
  const auto& r = experiment_registry();
  return std::find(r.begin(), r.end(), name) != r.end();
}

ExperimentReport run_experiment(const std::string& name, const Config& cfg) {
  for (const auto& [n, run] : registry()) {
    if (n != name) continue;
    try {
      return run(cfg);
    } catch (const std::exception& e) {
      throw std::runtime_error("experiment " + name + " failed: " + e.what());
    }
  }
  throw UnknownExperiment("unregistered experiment '" + name + "'");
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << csv_schema_header << '\n';
  os << "quantity,truncation,measured,reference,tolerance,margin,pass\n";
  for (const auto& r : report.rows)
    os << csv_field(r.quantity) << ',' << csv_field(r.truncation) << ',' << format_number(r.measured) << ',' << format_number(r.reference)
       << ',' << format_number(r.tolerance) << ',' << format_number(r.margin()) << ',' << (r.pass() ? 1 : 0) << '\n';
  return os.str();
}

std::string format_summary(const std::vector<ExperimentReport>& reports, const Config& cfg) {
  std::ostringstream os;
  os << "kk-index-lab v1 summary\n";
  os << "config: modes=" << cfg.modes << " energy_cut=" << cfg.energy_cut << " hermite_cut=" << cfg.hermite_cut
     << " active_modes=" << cfg.active_modes << " sigma=" << cfg.sigma.describe()
     << " tolerance=" << format_number(cfg.tolerance) << " seed=" << cfg.seed << " group=" << cfg.group
     << " cocycle=" << cfg.cocycle << '\n';
  std::size_t total = 0, failed = 0;
  for (const auto& rep : reports) {
    total += rep.rows.size();
    failed += rep.failures();
    os << (rep.passed() ? "PASS " : "FAIL ") << rep.name << ": " << rep.rows.size() << " checks, " << rep.failures()
       << " failed\n";
    for (const auto& r : rep.rows)
      if (!r.pass())
        os << "  failed: " << r.quantity << " [" << r.truncation << "] measured " << format_number(r.measured)
           << " reference " << format_number(r.reference) << " margin " << format_number(r.margin()) << '\n';
  }
  os << "overall: " << (failed == 0 ? "PASS" : "FAIL") << " (" << total - failed << "/" << total << " checks)\n";
  return os.str();
}

void write_reports(const std::vector<ExperimentReport>& reports, const Config& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
  };
  for (const auto& rep : reports) {
    write(rep.name + ".csv", format_csv(rep));
    for (const auto& f : rep.files) write(f.name, std::string(csv_schema_header) + "\n" + f.content);
  }
  write("summary.txt", format_summary(reports, cfg));
}

// ------------------------------------------------------------ shared suites

CcrCarResult ccr_car_suite(const TruncationSpec& spec) {
  spec.validate();
  const int N = spec.max_mode, E = spec.max_energy;
  CcrCarResult r;
  auto b = enumerate_basis(spec, FockKind::boson);
  auto d = enumerate_basis(spec, FockKind::dual_boson);
  auto f = enumerate_basis(spec, FockKind::fermion);
  auto ib = SparseOperator::identity(b), id = SparseOperator::identity(d), jf = SparseOperator::identity(f);
  for (int n = 1; n <= N; ++n)
    for (int m = 1; m <= N; ++m) {
      const int safe = E - std::max(n, m);
      const double delta = n == m ? 1.0 : 0.0;
      auto kb = energy_mask(*b, safe), kd = energy_mask(*d, safe), kf = energy_mask(*f, safe);
      r.boson_ccr = std::max({r.boson_ccr,
                              masked_max_abs(graded_commutator(boson_raise(n, b), boson_lower(m, b)) - ib.scaled(delta), kb),
                              masked_max_abs(graded_commutator(boson_raise(n, b), boson_raise(m, b)), kb),
                              masked_max_abs(graded_commutator(boson_lower(n, b), boson_lower(m, b)), kb)});
      r.dual_ccr = std::max({r.dual_ccr,
                             masked_max_abs(graded_commutator(dual_lower(n, d), dual_raise(m, d)) + id.scaled(delta), kd),
                             masked_max_abs(graded_commutator(dual_raise(n, d), dual_raise(m, d)), kd),
                             masked_max_abs(graded_commutator(dual_lower(n, d), dual_lower(m, d)), kd)});
      auto gn = clifford(n, CliffordType::holo, f), gbm = clifford(m, CliffordType::antiholo, f);
      r.car_safe = std::max(r.car_safe, masked_max_abs(graded_commutator(gn, gbm) + jf.scaled(2.0 * delta), kf));
    }
  {
    auto full = enumerate_basis({N, N * (N + 1) / 2}, FockKind::fermion);
    auto one = SparseOperator::identity(full);
    for (int n = 1; n <= N; ++n)
      for (int m = 1; m <= N; ++m) {
        auto gn = clifford(n, CliffordType::holo, full), gm = clifford(m, CliffordType::holo, full);
        auto gbn = clifford(n, CliffordType::antiholo, full), gbm = clifford(m, CliffordType::antiholo, full);
        r.car_full = std::max({r.car_full, (graded_commutator(gn, gbm) + one.scaled(n == m ? 2.0 : 0.0)).max_abs(),
                               graded_commutator(gn, gm).max_abs(), graded_commutator(gbn, gbm).max_abs()});
      }
  }
  SparseOperator eb = energy_op(b), ed = energy_op(d), num = number_op(f);
  for (int n = 1; n <= N; ++n) {
    eb = eb + (boson_raise(n, b) * boson_lower(n, b)).scaled(Complex(0.0, n));
    ed = ed + (dual_raise(n, d) * dual_lower(n, d)).scaled(Complex(0.0, n));
    num = num + (clifford(n, CliffordType::antiholo, f) * clifford(n, CliffordType::holo, f)).scaled(0.5 * n);
  }
  r.energy_identity = std::max(eb.max_abs(), ed.max_abs());
  r.number_identity = num.max_abs();
  return r;
}

KernelResult kernel_suite(const TruncationSpec& spec, SpectatorCut cut) {
  DiracOperator d = build_dirac_R(spec, cut);
  auto ker = kernel(d.op);
  KernelResult r;
  r.dimension = ker.size();
  for (auto c : partition_counts(spec.max_mode, spec.max_energy, false)) r.predicted += c;
  for (const auto& v : ker)
    for (Eigen::SparseVector<Complex>::InnerIterator it(v.coefficients()); it; ++it)
      if (d.space.pair_energy(static_cast<std::size_t>(it.index())) != 0)
        r.off_vacuum = std::max(r.off_vacuum, std::abs(it.value()));
  return r;
}

FinGroupResult fingroup_suite(const Cocycle& tau, SeededRng& rng) {
  FinGroupResult r;
  const GroupPtr& G = tau.group();
  r.name = G->name();
  r.cocycle_violations = check_cocycle(tau).size();
  auto ext = make_extension(tau);
  const std::size_t n = ext->size();
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t z = 0; z < n; ++z)
        if (ext->mul(ext->mul(x, y), z) != ext->mul(x, ext->mul(y, z))) r.extension_associativity += 1.0;

  const int m = ext->root_order();
  auto f = GroupAlgebraElement::random(ext, rng), h = GroupAlgebraElement::random(ext, rng);
  auto sum = GroupAlgebraElement::zero(ext);
  for (int k = 0; k < m; ++k) {
    auto fk = level_project(f, k);
    sum = sum + fk;
    for (int l = 0; l < m; ++l)
      if (l != k) r.level_orthogonality = std::max(r.level_orthogonality, convolve(fk, level_project(h, l)).max_abs());
  }
  r.level_completeness = (sum - f).max_abs();

  auto X = translation_of(G);
  const std::size_t order = G->order();
  std::vector<CMatrix> img;
  std::vector<CrossedProductElement> deltas;
  for (std::size_t g = 0; g < order; ++g)
    for (std::size_t x = 0; x < order; ++x) {
      deltas.push_back(CrossedProductElement::delta(X, g, x));
      img.push_back(schatten_map(deltas.back()).dense());
    }
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    r.schatten_star = std::max(r.schatten_star,
                               (schatten_map(crossed_involution(deltas[i])).dense() - img[i].adjoint()).cwiseAbs().maxCoeff());
    for (std::size_t j = 0; j < deltas.size(); ++j)
      r.schatten_multiplicativity =
          std::max(r.schatten_multiplicativity,
                   (schatten_map(crossed_convolve(deltas[i], deltas[j])).dense() - img[i] * img[j]).cwiseAbs().maxCoeff());
  }

  std::vector<double> c(order);
  double s = 0.0;
  for (auto& v : c) s += (v = rng.uniform() + 0.1);
  for (auto& v : c) v /= s;
  auto p = mishchenko(c, X);
  r.mishchenko_idempotent = max_diff(crossed_convolve(p, p).values, p.values);
  CVector root(static_cast<Eigen::Index>(order));
  for (std::size_t i = 0; i < order; ++i) root(static_cast<Eigen::Index>(i)) = std::sqrt(c[i]);
  r.mishchenko_rank_one = (schatten_map(p).dense() - root * root.adjoint()).cwiseAbs().maxCoeff();

  r.blocks = decompose_twisted_algebra(tau);
  r.center_dimension = twisted_center_dimension(tau);
  for (std::size_t g = 0; g < order; ++g) {
    bool central = true;
    for (std::size_t k = 0; k < order && central; ++k) central = tau.exponent(g, k) == tau.exponent(k, g);
    r.commuting_elements += central;
  }
  return r;
}

MIsoResult m_iso_trials(const Cocycle& tau, int trials, SeededRng& rng) {
  MIsoResult r;
  r.trials = trials;
  auto ext = make_extension(tau);
  auto X = translation_of(tau.group());
  const std::size_t order = tau.group()->order();
  for (int t = 0; t < trials; ++t) {
    auto phi1 = random_values(order, rng), psi1 = random_values(order, rng);
    auto phi2 = level_project(GroupAlgebraElement::random(ext, rng), 1);
    auto psi2 = level_project(GroupAlgebraElement::random(ext, rng), 1);
    auto b = level_project(GroupAlgebraElement::random(ext, rng), 1);
    auto a = CrossedProductElement::random(X, rng);
    auto mp = m_iso(phi1, phi2);
    r.levels_ok = r.levels_ok && mp.is_level(-1, 1, 1e-12);
    Complex ip = 0.0;
    for (std::size_t i = 0; i < order; ++i) ip += std::conj(phi1[i]) * psi1[i];
    auto lhs = module_inner(mp, m_iso(psi1, psi2));
    auto rhs = convolve(involution(phi2), psi2).scaled(ip);
    r.isometry = std::max(r.isometry, max_diff(lhs.values, rhs.values));
    r.right_module = std::max(r.right_module, max_diff(m_iso(phi1, convolve(phi2, b)).values, module_right(mp, b).values));
    auto left = module_left(TwistedCrossedElement::pullback(ext, a), mp);
    r.left_module = std::max(r.left_module, max_diff(left.values, m_iso(crossed_apply(a, phi1), phi2).values));
  }
  return r;
}

const std::vector<GroupCase>& standard_group_cases() {
  static const std::vector<GroupCase> cases{{"2", "carry"}, {"3", "carry"}, {"4x2", "heisenberg"}, {"3x3", "heisenberg"}};
  return cases;
}

Cocycle make_group_cocycle(const GroupCase& c, int root_order) {
  return Cocycle::named(parse_group(c.group), c.cocycle, root_order);
}

}  // namespace kkindex

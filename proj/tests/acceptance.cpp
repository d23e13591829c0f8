// One PASS/FAIL line per acceptance criterion. Usage: acceptance <path to kkindex>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kkindex/experiments.hpp"

using namespace kkindex;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

template <class F>
void criterion(int id, const std::string& title, F&& body) {
  Outcome out;
  auto t0 = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  failures += !out.pass;
  std::cout << "criterion " << id << " " << (out.pass ? "PASS" : "FAIL") << " " << title << ":" << out.detail.str()
            << " (" << std::round(seconds_since(t0) * 10) / 10 << " s)" << std::endl;
}

// Partitions of w into parts of size at most N.
long long bounded_partitions(int w, int N) {
  std::vector<long long> p(static_cast<std::size_t>(w) + 1, 0);
  p[0] = 1;
  for (int part = 1; part <= N; ++part)
    for (int s = part; s <= w; ++s) p[static_cast<std::size_t>(s)] += p[static_cast<std::size_t>(s - part)];
  long long total = 0;
  for (int s = 0; s <= w; ++s) total += p[static_cast<std::size_t>(s)];
  return total;  // cumulative over weights 0..w
}

double sparse_max_abs(const SpMatrix& m) {
  double out = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMatrix::InnerIterator it(m, k); it; ++it) out = std::max(out, std::abs(it.value()));
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <kkindex binary>\n";
    return 2;
  }
  const std::string cli = argv[1];

  criterion(1, "square of d_R equals 2(N + energy/i) at N=4 E=10", [](Outcome& o) {
    auto t0 = Clock::now();
    double joint = weitzenbock_residual({4, 10}, SpectatorCut::joint);
    double indep = weitzenbock_residual({4, 10}, SpectatorCut::independent);
    double t = seconds_since(t0);
    o.detail << " residual joint=" << format_number(joint) << " independent=" << format_number(indep);
    o.require(joint <= 1e-12 && indep <= 1e-12, "residual <= 1e-12");
    o.require(t < 30.0, "runtime < 30 s");
  });

  criterion(2, "CCR/CAR on safe subspaces for N<=4 E<=10", [](Outcome& o) {
    double worst = 0.0, identities = 0.0;
    for (int N = 1; N <= 4; ++N)
      for (int E = 1; E <= 10; ++E) {
        CcrCarResult r = ccr_car_suite({N, E});
        worst = std::max({worst, r.boson_ccr, r.dual_ccr, r.car_safe, r.car_full});
        identities = std::max({identities, r.energy_identity, r.number_identity});
      }
    o.detail << " max relation residual=" << format_number(worst) << " max identity residual=" << format_number(identities);
    o.require(worst <= 1e-12, "relations <= 1e-12");
    o.require(identities <= 1e-12, "energy and number identities <= 1e-12");
  });

  criterion(3, "kernel of d_R equals the weighted partition count", [](Outcome& o) {
    KernelResult ref = kernel_suite({3, 4});
    o.detail << " dim ker at N=3 E=4 is " << ref.dimension;
    o.require(ref.dimension == 11, "dim ker = 11 at N=3 E=4");
    int tested = 0;
    double off = ref.off_vacuum;
    for (int N = 1; N <= 4; ++N)
      for (int E = 1; E <= 8; ++E) {
        for (auto cut : {SpectatorCut::joint, SpectatorCut::independent}) {
          KernelResult r = kernel_suite({N, E}, cut);
          ++tested;
          off = std::max(off, r.off_vacuum);
          if (static_cast<long long>(r.dimension) != bounded_partitions(E, N)) {
            o.require(false, "partition count at N=" + std::to_string(N) + " E=" + std::to_string(E));
          }
        }
      }
    o.detail << "; " << tested << " truncations agree with the partition oracle; weight off v (x) vacuum (x) 1_f="
             << format_number(off);
    o.require(off <= 1e-12, "kernel vectors supported on boson (x) vacuum (x) 1_f");
  });

  criterion(4, "dual lowering estimate over lambda^2 <= 24, n <= 4", [](Outcome& o) {
    std::size_t violations = 0, states = 0;
    double defect = 0.0;
    for (int n = 1; n <= 4; ++n) {
      EstimateReport r = per_estimate({4, 12}, n);
      violations += r.violations;
      states += r.equality_states;
      defect = std::max(defect, r.equality_defect);
      o.require(r.equality_states == static_cast<std::size_t>(12 / n), "equality monomials for n=" + std::to_string(n));
      std::size_t scanned = 0;
      for (const auto& s : r.shells) scanned += s.states;
      o.require(scanned > 0, "nonempty scan");
    }
    o.detail << " violations=" << violations << " equality monomials=" << states
             << " max |ratio - sqrt(k)| defect=" << format_number(defect);
    o.require(violations == 0, "no violations");
    o.require(defect <= 1e-12, "equality on single-mode dual monomials");
  });

  criterion(5, "norm of dR_z on Xi and pow2 tail bounds", [](Outcome& o) {
    double worst = 0.0, agree = 0.0;
    for (double s : {1.0, 0.5, 0.125}) {
      XiDerivativeNorm r = dRz_norm_on_xi(s);
      worst = std::max({worst, std::abs(r.position - s / 2), std::abs(r.momentum - s / 2)});
      agree = std::max(agree, std::abs(r.position - r.momentum));
      o.require(r.position <= s && r.momentum <= s && r.hermite <= s, "norm <= sigma at sigma=" + format_number(s));
    }
    o.detail << " max |norm - sigma/2|=" << format_number(worst) << " position vs momentum=" << format_number(agree);
    o.require(worst <= 1e-6 && agree <= 1e-6, "sigma/2 within 1e-6 by two methods");
    double min_margin = 1e300;
    for (const auto& row : tail_table(3, 8, SigmaSequence::pow2())) min_margin = std::min(min_margin, row.bound - row.measured);
    o.detail << "; min tail margin M=3..8=" << format_number(min_margin);
    o.require(min_margin >= 0.0, "tail bound dominates frozen tail norm");
  });

  criterion(6, "finite-group suite on Z2, Z3, Z4xZ2, Z3xZ3", [](Outcome& o) {
    SeededRng rng(20240611);
    for (const auto& c : standard_group_cases()) {
      Cocycle tau = make_group_cocycle(c);
      FinGroupResult r = fingroup_suite(tau, rng);
      const std::string tag = c.group + "/" + c.cocycle;
      o.require(r.cocycle_violations == 0 && r.extension_associativity == 0.0, tag + " cocycle identities");
      o.require(r.level_orthogonality <= 1e-12 && r.level_completeness <= 1e-12, tag + " level orthogonality");
      o.require(r.schatten_multiplicativity <= 1e-12 && r.schatten_star <= 1e-12, tag + " schatten *-isomorphism");
      o.require(r.mishchenko_idempotent <= 1e-12 && r.mishchenko_rank_one <= 1e-12, tag + " mishchenko idempotent");
      o.detail << " " << tag << " blocks=";
      for (std::size_t i = 0; i < r.blocks.size(); ++i) o.detail << (i ? "+" : "") << r.blocks[i];
      o.detail << " center=" << r.center_dimension;
      int sum_sq = 0;
      for (int d : r.blocks) sum_sq += d * d;
      o.require(static_cast<std::size_t>(sum_sq) == tau.group()->order(), tag + " block dimensions");
      const auto& mod = tau.group()->moduli();
      if (c.cocycle == "heisenberg" && mod[0] == mod[1]) {
        // Z_n x Z_n: one block of dimension n
        o.require(r.blocks == std::vector<int>{mod[0]} && r.center_dimension == 1, tag + " single block");
      } else if (c.cocycle == "heisenberg") {
        // Z4 x Z2: order 8 is not a square, so blocks of dimension gcd = 2, one per central element
        o.require(r.center_dimension == r.commuting_elements, tag + " center vs commuting elements");
      }
    }
  });

  criterion(7, "m-iso on Z3 with the mu_3 extension, 100 trials", [](Outcome& o) {
    SeededRng rng(20240611);
    MIsoResult r = m_iso_trials(make_group_cocycle({"3", "carry"}), 100, rng);
    o.detail << " trials=" << r.trials << " isometry=" << format_number(r.isometry)
             << " right=" << format_number(r.right_module) << " left=" << format_number(r.left_module);
    o.require(r.isometry <= 1e-10 && r.right_module <= 1e-10 && r.left_module <= 1e-10, "identities <= 1e-10");
    o.require(r.levels_ok, "output levels");
  });

  criterion(8, "assembly equals d_L at N=3 E=8 M=3 pow2; finite analogue", [](Outcome& o) {
    const TruncationSpec spec{3, 8};
    JCycle c = build_j_cycle(spec, 3, SigmaSequence::pow2());
    AssemblyResult a = assemble(c);
    DiracOperator left = build_dirac_L(spec, c.cut);
    const auto& ba = *a.cycle.op.domain();
    const auto& bl = *left.op.domain();
    bool same_labels = ba.size() == bl.size();
    for (std::size_t i = 0; same_labels && i < ba.size(); ++i) same_labels = ba.label(i) == bl.label(i);
    o.require(same_labels, "same product basis");
    double diff = same_labels ? sparse_max_abs(a.cycle.op.matrix() - left.op.matrix()) : 1e300;
    o.detail << " dim=" << ba.size() << " max entry difference=" << format_number(diff);
    o.require(diff <= 1e-10, "entrywise <= 1e-10");
    double spectra = 0.0;
    for (const auto& gc : standard_group_cases()) {
      FiniteAssemblyReport r = finite_assembly(make_group_cocycle(gc));
      spectra = std::max({spectra, r.spectrum_difference, r.analytic_spectrum_difference});
    }
    o.detail << "; finite spectra difference=" << format_number(spectra);
    o.require(spectra <= 1e-8, "finite spectra <= 1e-8");
  });

  criterion(9, "KK index cycle vs analytic index cycle", [](Outcome& o) {
    SeededRng rng(20240611);
    double inter = 0.0, spec = 0.0;
    int tested = 0;
    for (int N = 1; N <= 4; ++N)
      for (int E = 2; E <= 8; E += 2)
        for (auto cut : {SpectatorCut::independent, SpectatorCut::joint}) {
          IndexComparison r = compare_indices(analytic_index({N, E}, cut), kk_index({N, E}, cut), rng);
          ++tested;
          inter = std::max(inter, r.intertwining);
          spec = std::max(spec, r.spectrum_difference);
          o.require(r.same_dimension && r.kk_kernel == r.analytic_kernel,
                    "dimensions at N=" + std::to_string(N) + " E=" + std::to_string(E));
        }
    o.detail << " truncations=" << tested << " intertwining=" << format_number(inter)
             << " spectra=" << format_number(spec);
    o.require(inter <= 1e-10, "transpose intertwining <= 1e-10");
    o.require(spec <= 1e-10, "identical spectra multisets");
  });

  criterion(10, "kkindex run all is deterministic and under 5 min", [&cli](Outcome& o) {
    const fs::path base = fs::temp_directory_path() / "kkindex_acceptance";
    fs::remove_all(base);
    double worst = 0.0;
    int status[2] = {0, 0};
    for (int i = 0; i < 2; ++i) {
      const fs::path out = base / ("run" + std::to_string(i));
      std::string cmd = "\"" + cli + "\" run all --out \"" + out.string() + "\" > \"" + (base / "log").string() +
                        std::to_string(i) + "\" 2>&1";
      fs::create_directories(base);
      auto t0 = Clock::now();
      status[i] = std::system(cmd.c_str());
      worst = std::max(worst, seconds_since(t0));
    }
    std::size_t files = 0, differing = 0;
    for (const auto& entry : fs::directory_iterator(base / "run0")) {
      ++files;
      const fs::path other = base / "run1" / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
    }
    std::size_t files1 = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(base / "run1")) ++files1;
    o.detail << " files=" << files << " differing=" << differing << " slowest run=" << std::round(worst * 10) / 10
             << " s exit=" << status[0] << "," << status[1];
    o.require(files > 0 && files == files1 && differing == 0, "byte-identical reports");
    o.require(worst < 300.0, "runtime < 5 min");
    o.require(status[0] == 0 && status[1] == 0, "all checks pass");
    fs::remove_all(base);
  });

  std::cout << (failures == 0 ? "acceptance: all criteria pass" : "acceptance: " + std::to_string(failures) + " failing")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

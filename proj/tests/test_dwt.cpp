#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "wavetoken/dwt.hpp"
#include "wavetoken/random.hpp"

using namespace wavetoken;

namespace {

std::vector<double> random_signal(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal() * 3.0 + rng.uniform(-1.0, 1.0);
  return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Hand-convolution oracle for one Haar level: a = (x0 + x1)/sqrt2, d = (x0 - x1)/sqrt2.
std::pair<std::vector<double>, std::vector<double>> haar_oracle(const std::vector<double>& x) {
  std::vector<double> a, d;
  for (std::size_t k = 0; k + 1 < x.size(); k += 2) {
    a.push_back((x[k] + x[k + 1]) / std::numbers::sqrt2);
    d.push_back((x[k] - x[k + 1]) / std::numbers::sqrt2);
  }
  return {a, d};
}

const std::vector<double> kRefSignal{0.002, 0.597, -0.548, -1.781, -0.909, -1.983, 0.12, 2.68,
                                     -0.984, -1.241, 0.98, 0.714, 0.211, -1.861, -0.059, 1.391,
                                     -2.688, -0.915, -3.802, -2.579, -3.683, -0.47, -2.535};

struct Reference {
  const char* family;
  int level;
  std::vector<std::vector<double>> coeffs;  // [a_J, d_J, ..., d_1]
};

// pywt.wavedec(kRefSignal, family, mode='symmetric', level=pywt.dwt_max_level(23, family))
const std::vector<Reference> kReferences{
    {"haar",
     4,
     {{-0.6677500000000003, -9.603500000000004},
      {-0.24325000000000005, 0.0},
      {-0.5791204537917826, -0.07530687219636728, -0.26905413024148084},
      {1.4640000000000004, -2.846, -1.9595000000000005, -1.491, 1.3890000000000002, 0.45850000000000035},
      {-0.4207285348059958, 0.8718626612030131, 0.7594326829943521, -1.810193359837562, 0.18172644276494276,
       0.18809040379562159, 1.4651252506185266, -1.0253048327204939, -1.253700323043749, -0.8647915933911474,
       -2.2719340879523773, 0.0}}},
    {"db2",
     2,
     {{0.44109029778510456, 0.5430475581655657, -2.1628822757418074, 0.44010472619995467, -0.24238351695806792,
       -2.599924597787296, -4.597518667469705, -3.8485000693930522},
      {-0.24177748800747031, -0.41962900320747837, 3.305237903606443, 1.953364446741667, 1.985201356337357,
       -2.320949745469812, 0.1050886067893656, 1.3316799912872885},
      {-0.36436159923899775, 0.26767330559591207, 0.6674387840088604, -0.6318481044524064, -0.8400097767243832,
       0.8804519681084333, 0.788438867568423, -0.33132954493670663, -2.1107937175358957, -1.381929197935162,
       -1.7838149370681706, -0.31429495561791065, 2.281847591508498}}},
    {"db4",
     1,
     {{-2.3327572611417615, -0.406566637732704, 0.162211264788034, 0.21574169904135304, -1.8763623690945594,
       -1.4558180851571554, 1.2227620402118289, -0.6290748615845833, 0.896606848632919, -0.9810279393899332,
       -0.17400398925322827, -2.9819189715251717, -4.610341688270412, -2.7829996791014495, -2.2260918452466285},
      {-0.26059220580823667, -0.3024445836008837, 1.051306474953409, 0.37518042831705034, -2.4461814972603197,
       1.9263132541319483, -0.2501635059269673, 1.0205361183966075, -2.962044165384889, -1.1539209913618167,
       -1.0902200648974751, -1.3695980574131372, 2.106326638298113, 0.8711624762528472, 1.842827958190372}}},
    {"bior2.2",
     2,
     {{0.44659375, 1.2519375, -1.861125, -0.3177499999999999, 0.5079374999999996, -0.05000000000000013,
       -5.969937499999999, -4.151031249999999, -2.38575},
      {-0.19424999999999998, -0.1751250000000001, 1.522875, 1.116125, 0.6675, 0.024000000000000007,
       0.20137499999999964, -0.43281249999999993, 0.13331249999999994},
      {0.2103642674029979, -0.6151828996322963, 0.7442298871988413, 1.1232391219148308, -2.200516303052536,
       0.8761053018901326, -0.08379215357060593, 1.3696658351583428, -1.9547966965902106, -1.6475588001646557,
       -0.8227187399105478, -1.8660547955512992, 0.7300877515751105, 1.5262899871911628}}},
};

}  // namespace

TEST(Decompose, ConstantPairsHaveZeroHaarDetails) {
  const auto p = decompose(std::vector<double>{2, 2, 4, 4}, get_family("haar"), 1);
  ASSERT_EQ(p.approx.size(), 2u);
  EXPECT_NEAR(p.approx[0], 2 * std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(p.approx[1], 4 * std::numbers::sqrt2, 1e-15);
  ASSERT_EQ(p.details.size(), 1u);
  EXPECT_EQ(p.details[0], (std::vector<double>{0.0, 0.0}));
}

TEST(Decompose, HaarHandConvolution) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto p = decompose(x, get_family("haar"), 1);
  const auto [a, d] = haar_oracle(x);
  EXPECT_LT(max_abs_diff(p.approx, a), 1e-15);
  EXPECT_LT(max_abs_diff(p.details[0], d), 1e-15);
  EXPECT_NEAR(p.approx[0], 3 / std::numbers::sqrt2, 1e-15);
  EXPECT_NEAR(p.details[0][0], -1 / std::numbers::sqrt2, 1e-15);
  double energy = 0.0;
  for (double v : p.approx) energy += v * v;
  for (double v : p.details[0]) energy += v * v;
  EXPECT_NEAR(energy, 30.0, 1e-12);
}

TEST(Decompose, MatchesReferenceToolbox) {
  for (const auto& ref : kReferences) {
    const auto f = get_family(ref.family);
    ASSERT_EQ(max_level(kRefSignal.size(), f), ref.level) << ref.family;
    const auto p = decompose(kRefSignal, f, ref.level);
    ASSERT_EQ(p.details.size() + 1, ref.coeffs.size());
    EXPECT_LT(max_abs_diff(p.approx, ref.coeffs[0]), 1e-12) << ref.family;
    for (std::size_t i = 0; i < p.details.size(); ++i)
      EXPECT_LT(max_abs_diff(p.details[i], ref.coeffs[i + 1]), 1e-12) << ref.family << " segment " << i;
  }
}

TEST(Decompose, Bior22Length512) {
  Rng rng(3);
  const auto p = decompose(random_signal(rng, 512), get_family("bior2.2"), 1);
  EXPECT_EQ(p.approx.size(), 258u);
  EXPECT_EQ(p.details[0].size(), 258u);
  EXPECT_EQ(p.coefficient_count(), 516u);
}

TEST(Decompose, RejectsTooShortAndNonFinite) {
  const auto f = get_family("bior2.2");
  try {
    decompose(std::vector<double>(9, 1.0), f, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::too_short);
  }
  EXPECT_THROW(decompose(std::vector<double>(64, 1.0), f, 0), Error);
  std::vector<double> x(64, 1.0);
  x[10] = std::numeric_limits<double>::infinity();
  try {
    decompose(x, f, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::non_finite);
  }
}

TEST(Reconstruct, HaarRoundTripLength64) {
  Rng rng(11);
  const auto f = get_family("haar");
  const auto x = random_signal(rng, 64);
  EXPECT_LT(max_abs_diff(reconstruct(decompose(x, f, 3), f), x), 1e-9);
}

TEST(Reconstruct, ZeroedDetailsGiveHaarBlockMeans) {
  Rng rng(12);
  const auto f = get_family("haar");
  const auto x = random_signal(rng, 64);
  auto p = decompose(x, f, 3);
  for (auto& d : p.details) std::fill(d.begin(), d.end(), 0.0);
  const auto y = reconstruct(p, f);
  for (std::size_t b = 0; b < 64; b += 8) {
    double mean = 0.0;
    for (std::size_t i = b; i < b + 8; ++i) mean += x[i] / 8.0;
    for (std::size_t i = b; i < b + 8; ++i) EXPECT_NEAR(y[i], mean, 1e-12);
  }
}

TEST(Reconstruct, Bior22NonPowerOfTwo) {
  Rng rng(13);
  const auto f = get_family("bior2.2");
  const auto x = random_signal(rng, 100);
  EXPECT_LT(max_abs_diff(reconstruct(decompose(x, f, 2), f), x), 1e-9);
}

TEST(Reconstruct, RejectsInconsistentPyramid) {
  Rng rng(14);
  const auto f = get_family("db2");
  auto p = decompose(random_signal(rng, 50), f, 2);
  p.details[1].pop_back();
  try {
    reconstruct(p, f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::inconsistent);
  }
  p = decompose(random_signal(rng, 50), f, 2);
  p.details.pop_back();
  EXPECT_THROW(reconstruct(p, f), Error);
}

TEST(CoefficientLayout, DocumentedCases) {
  EXPECT_EQ(coefficient_layout(512, get_family("haar"), 1), (std::vector<std::size_t>{256, 256}));
  EXPECT_EQ(coefficient_layout(64, get_family("bior2.2"), 1), (std::vector<std::size_t>{34, 34}));
  EXPECT_EQ(coefficient_layout(512, get_family("haar"), 3), (std::vector<std::size_t>{64, 64, 128, 256}));
}

// Independent length oracle: floor((n + L - 1) / 2) iterated.
TEST(CoefficientLayout, AgreesWithDecomposeShapes) {
  Rng rng(15);
  for (auto name : kFamilyNames) {
    const auto f = get_family(name);
    for (std::size_t n = 2; n <= 300; n += 7) {
      for (int level = 1; level <= max_level(n, f); ++level) {
        for (auto mode : {BoundaryMode::symmetric, BoundaryMode::periodic}) {
          const auto layout = coefficient_layout(n, f, level, mode);
          const auto p = decompose(random_signal(rng, n), f, level, mode);
          ASSERT_EQ(layout.size(), p.details.size() + 1);
          EXPECT_EQ(layout[0], p.approx.size());
          for (std::size_t i = 0; i < p.details.size(); ++i) EXPECT_EQ(layout[i + 1], p.details[i].size());
          if (mode == BoundaryMode::symmetric) {
            std::size_t m = n;
            std::vector<std::size_t> expect;
            for (int j = 0; j < level; ++j) {
              m = (m + f.filter_length() - 1) / 2;
              expect.insert(expect.begin(), m);
            }
            expect.insert(expect.begin(), m);
            EXPECT_EQ(layout, expect);
          }
        }
      }
    }
  }
}

TEST(DwtProperties, RoundTripAllFamiliesModesLevels) {
  Rng rng(16);
  for (int trial = 0; trial < 400; ++trial) {
    const auto n = static_cast<std::size_t>(rng.integer(2, 1024));
    for (auto name : kFamilyNames) {
      const auto f = get_family(name);
      const int deepest = std::min(max_level(n, f), 5);
      if (deepest < 1) continue;
      const int level = static_cast<int>(rng.integer(1, deepest));
      const auto mode = rng.bernoulli(0.5) ? BoundaryMode::symmetric : BoundaryMode::periodic;
      const auto x = random_signal(rng, n);
      EXPECT_LT(max_abs_diff(reconstruct(decompose(x, f, level, mode), f), x), 1e-9)
          << name << " n=" << n << " J=" << level;
    }
  }
}

TEST(DwtProperties, ParsevalForOrthogonalFamiliesPeriodic) {
  Rng rng(17);
  for (auto name : {"haar", "db2", "db4"}) {
    const auto f = get_family(name);
    for (int trial = 0; trial < 50; ++trial) {
      const int level = static_cast<int>(rng.integer(1, 4));
      const std::size_t blocks = static_cast<std::size_t>(rng.integer(2, 40));
      const std::size_t n = blocks << level;
      if (max_level(n, f) < level) continue;
      const auto x = random_signal(rng, n);
      const auto p = decompose(x, f, level, BoundaryMode::periodic);
      double ex = 0.0, ec = 0.0;
      for (double v : x) ex += v * v;
      for (double v : p.approx) ec += v * v;
      for (const auto& d : p.details)
        for (double v : d) ec += v * v;
      EXPECT_LE(std::abs(ec - ex) / ex, 1e-10) << name << " n=" << n;
    }
  }
}

TEST(DwtProperties, Linearity) {
  Rng rng(18);
  for (auto name : kFamilyNames) {
    const auto f = get_family(name);
    for (int trial = 0; trial < 20; ++trial) {
      const auto n = static_cast<std::size_t>(rng.integer(40, 300));
      const int level = static_cast<int>(rng.integer(1, max_level(n, f)));
      const auto x = random_signal(rng, n);
      const auto y = random_signal(rng, n);
      const double alpha = rng.uniform(-3, 3), beta = rng.uniform(-3, 3);
      std::vector<double> z(n);
      for (std::size_t i = 0; i < n; ++i) z[i] = alpha * x[i] + beta * y[i];
      const auto px = decompose(x, f, level), py = decompose(y, f, level), pz = decompose(z, f, level);
      for (std::size_t i = 0; i < pz.approx.size(); ++i)
        EXPECT_NEAR(pz.approx[i], alpha * px.approx[i] + beta * py.approx[i], 1e-9);
      for (std::size_t s = 0; s < pz.details.size(); ++s)
        for (std::size_t i = 0; i < pz.details[s].size(); ++i)
          EXPECT_NEAR(pz.details[s][i], alpha * px.details[s][i] + beta * py.details[s][i], 1e-9);
    }
  }
}

TEST(DwtProperties, FloatInstantiation) {
  std::vector<float> x(40);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3f * static_cast<float>(i));
  const auto f = get_family("bior2.2");
  const auto y = reconstruct(decompose(x, f, 2), f);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-5f);
}

#ifndef NIRT_SIM_HPP
#define NIRT_SIM_HPP

#include "nirt/core.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace nirt::sim {

enum class ItemKind
{
  TwoPL,
  ThreePN,
};

struct TrueItem
{
  ItemKind kind = ItemKind::TwoPL;
  double a = 1.0;  // TwoPL discrimination
  double b = 0.0;  // difficulty, both kinds
  double a1 = 0.6; // ThreePN shape parameters
  double a2 = 0.3;

  static TrueItem two_pl(double a, double b) { return {ItemKind::TwoPL, a, b, 0.0, 0.0}; }
  static TrueItem three_pn(double a1, double a2, double b)
  {
    return {ItemKind::ThreePN, 0.0, b, a1, a2};
  }
  bool operator==(const TrueItem&) const = default;
};

struct SimConfig
{
  std::size_t n_examinees = 1000;
  std::size_t n_items = 30;
  double rho = 0.0; // fraction of ThreePN items
  ClassLadder ladder = ClassLadder::standard_ten();
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimDataset
{
  ResponseMatrix responses;
  std::vector<std::size_t> true_classes; // 0-based
  ProbIcc true_icc;
  std::vector<TrueItem> items;
  std::vector<double> thetas;
  std::vector<std::size_t> flagged_items; // ThreePN curves found non-monotone on [-4, 4]
};

/// Class whose half-open range [lower, upper) contains theta (0-based).
std::size_t theta_to_class(double theta, const ClassLadder& ladder);

/// 1 / (1 + exp(-1.7 a (theta - b))).
double icc_2pl(const TrueItem& item, double theta);

/// Phi(a2 d^3 + sqrt(3 a1 a2) d^2 + a1 d) with d = theta - b.
double icc_3pn(const TrueItem& item, double theta);

double item_curve(const TrueItem& item, double theta);

/// Each item's curve evaluated at the ladder medians.
ProbIcc tabulate_true_icc(const std::vector<TrueItem>& items, const ClassLadder& ladder);

/// round(rho * n_items) with halves rounded up.
std::size_t three_pn_count(double rho, std::size_t n_items);

/// Whether the ThreePN curve is nondecreasing on a 0.01 grid over [-4, 4].
bool three_pn_monotone_on_grid(const TrueItem& item);

/// Seeded substreams.
///
/// Stream k is a std::mt19937_64 seeded with SplitMix64(seed ^ tag_k). The
/// engine's output sequence is fixed by the C++ standard, and uniforms are
/// built from the top 53 bits, so datasets are identical across platforms.
class Stream
{
public:
  enum Tag : std::uint64_t
  {
    Abilities = 0x7468657461ULL, // "theta"
    ItemParameters = 0x6974656d73ULL,
    Responses = 0x7265737073ULL,
  };

  Stream(std::uint64_t seed, Tag tag);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by inversion.
  double normal() { return inverse_normal_cdf(uniform()); }

private:
  std::mt19937_64 engine_;
};

/// Abilities, true classes, item curves and Bernoulli responses. The
/// ThreePN items occupy the highest item indices.
SimDataset generate(const SimConfig& config);

} // namespace nirt::sim

#endif // NIRT_SIM_HPP

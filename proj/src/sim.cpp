#include "nirt/sim.hpp"

namespace nirt::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

void SimConfig::validate() const
{
  if (n_examinees < 1) {
    throw Error("examinees: must be at least 1");
  }
  if (n_items < 1) {
    throw Error("items: must be at least 1");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw Error("rho: must lie in [0, 1]");
  }
}

Stream::Stream(std::uint64_t seed, Tag tag) : engine_(splitmix64(seed ^ tag)) {}

double Stream::uniform()
{
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::size_t theta_to_class(double theta, const ClassLadder& ladder)
{
  const auto& cuts = ladder.boundaries();
  return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), theta) - cuts.begin());
}

double icc_2pl(const TrueItem& item, double theta)
{
  return logistic(1.7 * item.a * (theta - item.b));
}

double icc_3pn(const TrueItem& item, double theta)
{
  const double d = theta - item.b;
  const double p = item.a2 * d * d * d + std::sqrt(3.0 * item.a1 * item.a2) * d * d + item.a1 * d;
  return normal_cdf(p);
}

double item_curve(const TrueItem& item, double theta)
{
  return item.kind == ItemKind::TwoPL ? icc_2pl(item, theta) : icc_3pn(item, theta);
}

ProbIcc tabulate_true_icc(const std::vector<TrueItem>& items, const ClassLadder& ladder)
{
  const auto& medians = ladder.medians();
  std::vector<double> x;
  x.reserve(items.size() * medians.size());
  for (const auto& item : items) {
    for (double m : medians) {
      x.push_back(item_curve(item, m));
    }
  }
  return ProbIcc(items.size(), medians.size(), std::move(x));
}

std::size_t three_pn_count(double rho, std::size_t n_items)
{
  // Guard against 0.3 * 10 = 2.9999999999999996 style products.
  const double exact = rho * static_cast<double>(n_items);
  return static_cast<std::size_t>(std::floor(exact + 0.5 + 1e-9));
}

bool three_pn_monotone_on_grid(const TrueItem& item)
{
  double previous = icc_3pn(item, item.b - 4.0);
  for (int k = 1; k <= 800; ++k) {
    const double value = icc_3pn(item, item.b - 4.0 + 0.01 * k);
    if (value < previous) {
      return false;
    }
    previous = value;
  }
  return true;
}

SimDataset generate(const SimConfig& config)
{
  config.validate();
  const std::size_t I = config.n_examinees;
  const std::size_t J = config.n_items;

  Stream ability_stream(config.seed, Stream::Abilities);
  std::vector<double> thetas(I);
  std::vector<std::size_t> classes(I);
  for (std::size_t i = 0; i < I; ++i) {
    thetas[i] = ability_stream.normal();
    classes[i] = theta_to_class(thetas[i], config.ladder);
  }

  Stream item_stream(config.seed, Stream::ItemParameters);
  const std::size_t first_three_pn = J - three_pn_count(config.rho, J);
  std::vector<TrueItem> items;
  items.reserve(J);
  std::vector<std::size_t> flagged;
  for (std::size_t j = 0; j < J; ++j) {
    if (j < first_three_pn) {
      const double a = item_stream.uniform(0.5, 2.0);
      const double b = item_stream.uniform(-1.5, 1.5);
      items.push_back(TrueItem::two_pl(a, b));
    } else {
      const double a1 = item_stream.uniform(0.4, 0.8);
      const double a2 = item_stream.uniform(0.1, 0.5);
      const double b = item_stream.uniform(-0.5, 0.5);
      items.push_back(TrueItem::three_pn(a1, a2, b));
      if (!three_pn_monotone_on_grid(items.back())) {
        flagged.push_back(j);
      }
    }
  }
  ProbIcc icc = tabulate_true_icc(items, config.ladder);

  Stream response_stream(config.seed, Stream::Responses);
  std::vector<std::uint8_t> u(I * J);
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      u[i * J + j] = response_stream.uniform() < icc(j, classes[i]) ? 1 : 0;
    }
  }

  return SimDataset{ResponseMatrix(I, J, std::move(u)), std::move(classes), std::move(icc),
                    std::move(items),                    std::move(thetas),  std::move(flagged)};
}

} // namespace nirt::sim

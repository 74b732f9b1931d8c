#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "texmesh/errors.hpp"
#include "texmesh/evaluation_bench.hpp"

using namespace texmesh;
using doctest::Approx;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

double constant_residual(const std::vector<double>& y) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double s = 0;
  for (double v : y) s += (v - mean) * (v - mean);
  return std::sqrt(s / y.size());
}

}  // namespace

TEST_CASE("average ranks share ties") {
  const double v[] = {10, 30, 20, 30, 5};
  CHECK(average_ranks(v) == std::vector<double>{2, 4.5, 3, 4.5, 1});
}

TEST_CASE("Spearman examples") {
  const auto x = linspace(-2, 3, 15);
  std::vector<double> e, neg, cube, shifted;
  for (double v : x) {
    e.push_back(std::exp(v));
    neg.push_back(-v);
    cube.push_back(v * v * v);
    shifted.push_back(std::atan(v) + 7);
  }
  CHECK(spearman(x, e) == Approx(1.0));
  CHECK(spearman(x, cube) == Approx(1.0));
  CHECK(spearman(x, shifted) == Approx(1.0));
  CHECK(spearman(x, neg) == Approx(-1.0));
  const double a[] = {1, 2, 3, 4}, b[] = {1, 3, 2, 4};
  CHECK(spearman(a, b) == Approx(1.0 - 6.0 * 2 / (4 * 15)).epsilon(1e-12));
  CHECK(spearman(a, b) == Approx(0.8).epsilon(1e-12));

  // invariance under increasing transforms of either side
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<double> p(30), q(30), tp, tq;
  for (int i = 0; i < 30; ++i) p[i] = n(rng), q[i] = p[i] + n(rng);
  for (int i = 0; i < 30; ++i) tp.push_back(std::exp(p[i])), tq.push_back(5 * q[i] - 1);
  CHECK(spearman(tp, tq) == Approx(spearman(p, q)).epsilon(1e-12));

  const double flat[] = {2, 2, 2, 2};
  CHECK_THROWS_AS(spearman(a, flat), UndefinedCorrelationError);
}

TEST_CASE("Pearson examples") {
  const auto x = linspace(0, 1, 9);
  std::vector<double> lin, neg;
  for (double v : x) lin.push_back(2 * v + 1), neg.push_back(-3 * v);
  CHECK(pearson(x, lin) == Approx(1.0));
  CHECK(pearson(x, neg) == Approx(-1.0));
  const double a[] = {0, 1, 2}, b[] = {0, 1, 0};
  CHECK(std::abs(pearson(a, b)) < 1e-15);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  std::vector<double> p(25), q(25), scaled(25), flipped(25);
  for (int i = 0; i < 25; ++i) p[i] = n(rng), q[i] = p[i] * 0.5 + n(rng);
  for (int i = 0; i < 25; ++i) scaled[i] = 4 * p[i] + 2, flipped[i] = -0.3 * p[i] + 9;
  CHECK(pearson(scaled, q) == Approx(pearson(p, q)).epsilon(1e-12));
  CHECK(pearson(flipped, q) == Approx(-pearson(p, q)).epsilon(1e-12));
  CHECK_THROWS_AS(pearson(a, std::vector<double>{1, 1, 1}), UndefinedCorrelationError);
  CHECK_THROWS_AS(pearson(a, std::vector<double>{1, 2}), DimensionMismatchError);
}

TEST_CASE("logistic generate and recover") {
  const std::array<double, 4> truth{1.0, 4.0, 0.55, 0.08};
  const auto q = linspace(0.1, 1.0, 20);
  std::vector<double> s;
  for (double v : q) s.push_back(truth[0] + truth[1] / (1 + std::exp(-(v - truth[2]) / truth[3])));
  const auto fit = logistic_fit(q, s);
  CHECK(fit.residual < 1e-6);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(fit.map(q[i]) - s[i]) < 1e-3);
}

TEST_CASE("logistic fit of linear and noisy data") {
  const auto q = linspace(0.2, 0.9, 15);
  const auto fit = logistic_fit(q, q);
  for (double v : q) CHECK(std::abs(fit.map(v) - v) < 1e-3);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    std::vector<double> x(5), y(5);
    for (int i = 0; i < 5; ++i) x[i] = u(rng), y[i] = u(rng);
    CHECK(logistic_fit(x, y).residual <= constant_residual(y) + 1e-12);
  }
  CHECK_THROWS_AS(logistic_fit(std::vector<double>(6, 1.0), linspace(0, 1, 6)), InsufficientDataError);
  CHECK_THROWS_AS(logistic_fit(linspace(0, 1, 4), linspace(0, 1, 4)), InsufficientDataError);
}

TEST_CASE("identity series evaluate perfectly") {
  std::vector<MetricSample> series;
  for (const char* model : {"dwarf", "hulk", "car"})
    for (int i = 0; i < 12; ++i) series.push_back({model, std::to_string(i), 0.1 + 0.07 * i, 0.1 + 0.07 * i});
  const auto report = evaluate_metric(series);
  REQUIRE(report.models.size() == 3);
  CHECK(report.models[0].model == "dwarf");
  for (const auto& m : report.models) {
    CHECK(m.pearson == Approx(1.0).epsilon(1e-12));
    CHECK(m.spearman == Approx(1.0).epsilon(1e-12));
    CHECK(m.rmse < 1e-9);
  }
  CHECK(report.average_rmse < 1e-9);
  CHECK(report.average_spearman == Approx(1.0));

  const std::vector<std::pair<std::string, MetricReport>> rows{{"identity", report}};
  const auto csv = format_report_csv(rows);
  CHECK(csv.find("identity") != std::string::npos);
  CHECK(format_report_table(rows).find("hulk") != std::string::npos);
}

TEST_CASE("a permuted objective is mostly uncorrelated") {
  std::vector<double> subjective = linspace(0, 1, 20);
  int small = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    auto objective = subjective;
    std::shuffle(objective.begin(), objective.end(), std::mt19937_64(seed));
    small += std::abs(spearman(objective, subjective)) < 0.5;
  }
  CHECK(small >= 0.95 * 400);
}

#include <benchmark/benchmark.h>

#include <random>

#include "talkmoves/linear_backend.hpp"
#include "talkmoves/ols.hpp"
#include "talkmoves/synthetic.hpp"

namespace {

using namespace talkmoves;

void BM_LinearPredict(benchmark::State& state) {
  synthetic::CorpusOptions o;
  o.sessions = 10;
  WhitespaceTokenizer tok;
  auto ex = all_examples(synthetic::make_corpus(o).sessions, {}, tok);
  for (auto& e : ex) e.gold = synthetic::rule_labels(e.target_text);
  LinearBaselineBackend backend;
  TrainingConfig cfg;
  cfg.passes = 5;
  auto model = train_move_model(Move::eliciting, ex, {}, cfg, backend, tok);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_probability(model, backend, ex[i++ % ex.size()]));
  }
}
BENCHMARK(BM_LinearPredict);

void BM_ClusterRobustSe(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(n, 13);
  Eigen::VectorXd y(n);
  std::vector<std::string> clusters;
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 13; ++c) x(i, c) = z(rng);
    y(i) = z(rng);
    clusters.push_back("g" + std::to_string(i % 20));
  }
  std::vector<std::string> names;
  for (int c = 0; c < 13; ++c) names.push_back("x" + std::to_string(c));
  for (auto _ : state) {
    auto fit = fit_ols(x, y, names);
    benchmark::DoNotOptimize(cluster_robust_se(fit, clusters));
  }
}
BENCHMARK(BM_ClusterRobustSe)->Arg(200)->Arg(2000);

}  // namespace

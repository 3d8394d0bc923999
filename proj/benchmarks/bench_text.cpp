#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "talkmoves/annotation.hpp"
#include "talkmoves/example_builder.hpp"
#include "talkmoves/tokenizer.hpp"

namespace {

std::string random_text(std::size_t words, unsigned seed) {
  static const char* vocab[] = {"so", "what", "do", "you", "think", "about", "that.", "why?"};
  std::mt19937 rng(seed);
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += vocab[rng() % 8];
  }
  return s;
}

void BM_WordErrorRate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::string ref = random_text(n, 1), hyp = random_text(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(talkmoves::word_error_rate(ref, hyp));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_WordErrorRate)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_Segmentation(benchmark::State& state) {
  talkmoves::WhitespaceTokenizer tok;
  const std::string text = random_text(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(talkmoves::segment_text(text, 200, tok));
}
BENCHMARK(BM_Segmentation)->Arg(200)->Arg(2000)->Arg(20000);

}  // namespace

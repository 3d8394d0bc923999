// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/builders.hpp"
#include "support/fake_backend.hpp"
// Eigen goes before httplib: <resolv.h> defines a `_res` macro that clashes
// with Eigen parameter names.
#include "support/ols_oracle.hpp"
#include "support/mock_service.hpp"
#include "support/pipeline_runner.hpp"
#include "support/temp_dir.hpp"
#include "talkmoves/analysis.hpp"
#include "talkmoves/annotation.hpp"
#include "talkmoves/classifier.hpp"
#include "talkmoves/errors.hpp"
#include "talkmoves/example_builder.hpp"
#include "talkmoves/hashing.hpp"
#include "talkmoves/linear_backend.hpp"
#include "talkmoves/ols.hpp"
#include "talkmoves/remote_backend.hpp"
#include "talkmoves/synthetic.hpp"
#include "talkmoves/text.hpp"

using namespace talkmoves;
using namespace talkmoves::testing;
namespace fs = std::filesystem;

namespace {

// Collects failures of one criterion; the first few are printed.
struct Check {
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<void(Check&)> body;
};

const WhitespaceTokenizer kTok;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- 1: metrics ------------------------------------------------------------

struct Confusion {
  std::size_t tp, fp, fn, tn;
  double precision, recall, f1;
  bool p_undef, r_undef, f1_undef;
};

void metric_exactness(Check& c) {
  // Expected values worked out by hand as fractions.
  const std::vector<Confusion> cases = {
      {1, 0, 0, 0, 1.0, 1.0, 1.0, false, false, false},
      {3, 1, 2, 10, 3.0 / 4, 3.0 / 5, 2.0 / 3, false, false, false},
      {5, 5, 5, 5, 1.0 / 2, 1.0 / 2, 1.0 / 2, false, false, false},
      {2, 0, 6, 1, 1.0, 1.0 / 4, 2.0 / 5, false, false, false},
      {4, 6, 0, 3, 2.0 / 5, 1.0, 4.0 / 7, false, false, false},
      {7, 3, 1, 0, 7.0 / 10, 7.0 / 8, 7.0 / 9, false, false, false},
      {1, 2, 3, 4, 1.0 / 3, 1.0 / 4, 2.0 / 7, false, false, false},
      {10, 0, 10, 0, 1.0, 1.0 / 2, 2.0 / 3, false, false, false},
      {9, 1, 0, 90, 9.0 / 10, 1.0, 18.0 / 19, false, false, false},
      {6, 2, 4, 8, 3.0 / 4, 3.0 / 5, 2.0 / 3, false, false, false},
      {1, 9, 9, 1, 1.0 / 10, 1.0 / 10, 1.0 / 10, false, false, false},
      {12, 4, 3, 0, 3.0 / 4, 4.0 / 5, 24.0 / 31, false, false, false},
      {8, 8, 0, 0, 1.0 / 2, 1.0, 2.0 / 3, false, false, false},
      {3, 0, 1, 5, 1.0, 3.0 / 4, 6.0 / 7, false, false, false},
      {2, 3, 5, 7, 2.0 / 5, 2.0 / 7, 1.0 / 3, false, false, false},
      {20, 5, 15, 60, 4.0 / 5, 4.0 / 7, 2.0 / 3, false, false, false},
      {11, 1, 1, 1, 11.0 / 12, 11.0 / 12, 11.0 / 12, false, false, false},
      {4, 1, 2, 3, 4.0 / 5, 2.0 / 3, 8.0 / 11, false, false, false},
      {13, 7, 0, 2, 13.0 / 20, 1.0, 26.0 / 33, false, false, false},
      {5, 0, 0, 5, 1.0, 1.0, 1.0, false, false, false},
      // Zero denominators.
      {0, 0, 0, 9, 0.0, 0.0, 0.0, true, true, true},
      {0, 0, 4, 6, 0.0, 0.0, 0.0, true, false, true},
      {0, 3, 0, 6, 0.0, 0.0, 0.0, false, true, true},
      {0, 2, 5, 1, 0.0, 0.0, 0.0, false, false, true},
      {0, 1, 1, 0, 0.0, 0.0, 0.0, false, false, true},
  };
  auto backend = std::make_shared<TableBackend>();
  int k = 0;
  for (const auto& m : cases) {
    std::map<std::string, double> table;
    std::vector<AnnotationExample> test;
    auto add = [&](std::size_t n, bool truth, double p, const char* tag) {
      for (std::size_t i = 0; i < n; ++i) {
        AnnotationExample e = labeled(std::string(tag) + std::to_string(i), truth, Move::probing);
        table[e.target_text] = p;
        test.push_back(e);
      }
    };
    add(m.tp, true, 0.9, "tp");
    add(m.fp, false, 0.7, "fp");
    add(m.fn, true, 0.2, "fn");
    add(m.tn, false, 0.1, "tn");
    ModelHandle model;
    model.move = Move::probing;
    model.state = std::make_shared<TableState>(table);
    const EvalReport r = evaluate(model, *backend, test, 0.5, kTok);
    const std::string at = "case " + std::to_string(k++);
    c.expect(r.true_positive == m.tp && r.false_positive == m.fp &&
                 r.false_negative == m.fn && r.true_negative == m.tn,
             at + ": confusion counts");
    c.expect(std::abs(r.precision - m.precision) <= 1e-12, at + ": precision " + fmt(r.precision));
    c.expect(std::abs(r.recall - m.recall) <= 1e-12, at + ": recall " + fmt(r.recall));
    c.expect(std::abs(r.f1 - m.f1) <= 1e-12, at + ": f1 " + fmt(r.f1));
    c.expect(r.precision_undefined == m.p_undef && r.recall_undefined == m.r_undef &&
                 r.f1_undefined == m.f1_undef,
             at + ": undefined flags");
  }
  c.note = std::to_string(cases.size()) + " matrices";
}

// ---- 2: balancing ------------------------------------------------------------

void balancing_law(Check& c) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int n_neg = std::uniform_int_distribution<int>(0, 600)(rng);
    const int n_pos = std::uniform_int_distribution<int>(1, 150)(rng);
    const int factor = std::uniform_int_distribution<int>(1, 8)(rng);
    std::vector<AnnotationExample> in;
    for (int i = 0; i < n_neg + n_pos; ++i) in.push_back(labeled("e" + std::to_string(i), false, Move::revoicing));
    // Positives at random positions.
    std::vector<int> idx(in.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i = 0; i < n_pos; ++i) in[idx[i]].gold->revoicing = true;

    const auto out = balance_labels(in, Move::revoicing, factor, rng());
    const long expect_pos = std::max<long>(n_pos, (n_neg + factor - 1) / factor);
    std::vector<AnnotationExample> negs_in, negs_out;
    std::set<std::string> original_pos;
    for (const auto& e : in) {
      if (e.gold->revoicing) original_pos.insert(e.example_id);
      else negs_in.push_back(e);
    }
    long pos_out = 0;
    for (const auto& e : out) {
      if (e.gold->revoicing) ++pos_out;
      else negs_out.push_back(e);
    }
    const std::string at = "triple (" + std::to_string(n_neg) + "," + std::to_string(n_pos) + "," +
                           std::to_string(factor) + ")";
    c.expect(pos_out == expect_pos, at + ": positives " + std::to_string(pos_out));
    c.expect(negs_in == negs_out, at + ": negatives changed");
    // The input is kept as a prefix; appended items copy original positives.
    c.expect(out.size() >= in.size() && std::equal(in.begin(), in.end(), out.begin()),
             at + ": originals not preserved");
    for (std::size_t i = in.size(); i < out.size(); ++i) {
      const auto& e = out[i];
      bool dup = e.gold->revoicing && original_pos.count(e.example_id);
      if (dup) {
        auto it = std::find_if(in.begin(), in.end(), [&](const auto& x) { return x.example_id == e.example_id; });
        dup = it != in.end() && *it == e;
      }
      c.expect(dup, at + ": appended item is not a positive duplicate");
    }
  }
  c.note = "100 triples";
}

// ---- 3: registry ----------------------------------------------------------

void registry(Check& c) {
  struct Expect {
    Move move;
    int context;
    TruncationSide side;
    std::optional<int> factor;
  };
  const std::vector<Expect> table = {
      {Move::adding_on, 2, TruncationSide::keep_start, std::nullopt},
      {Move::connecting, 0, TruncationSide::keep_end, 6},
      {Move::eliciting, 0, TruncationSide::keep_end, std::nullopt},
      {Move::probing, 2, TruncationSide::keep_end, std::nullopt},
      {Move::revoicing, 2, TruncationSide::keep_end, 1},
      {Move::model_utterance, 2, TruncationSide::keep_end, 1},
  };
  for (const auto& e : table) {
    const auto p = best_config_for(e.move).preprocess;
    const std::string name(move_name(e.move));
    c.expect(p.context_size == e.context, name + ": context size");
    // Truncation only matters when prior text is included.
    if (e.context > 0) c.expect(p.truncation_side == e.side, name + ": truncation side");
    c.expect(p.balancing_factor == e.factor, name + ": balancing factor");
    c.expect(best_config_for(move_name(e.move)).preprocess == p, name + ": lookup by name");
  }
  bool threw = false;
  try {
    best_config_for("lecturing");
  } catch (const UnknownMoveError&) {
    threw = true;
  }
  c.expect(threw, "unknown move accepted");
  c.note = "6 moves";
}

// ---- 4: segmentation / truncation ----------------------------------------------

void segmentation(Check& c) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> vocab = {"so", "what", "do", "you", "think", "it's", "ok.",
                                          "why?", "right!", "x", "12", "and"};
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 1000)(rng);
    std::vector<std::string> toks;
    for (int i = 0; i < n; ++i) toks.push_back(vocab[rng() % vocab.size()]);
    const std::string at = "sequence " + std::to_string(trial);

    PreprocessConfig cfg;
    cfg.context_size = 2;
    cfg.truncation_side = (trial % 2) ? TruncationSide::keep_start : TruncationSide::keep_end;
    const auto segs = segment_text(join(toks, " "), cfg.segment_token_limit, kTok);
    std::vector<std::string> concat;
    for (const auto& s : segs) {
      const auto part = kTok.tokenize(s.text);
      c.expect(!part.empty() && part.size() <= 200u, at + ": segment size");
      concat.insert(concat.end(), part.begin(), part.end());
    }
    c.expect(concat == toks, at + ": concatenation lost tokens");

    const int prior_len = std::uniform_int_distribution<int>(0, 900)(rng);
    std::vector<std::string> prior;
    for (int i = 0; i < prior_len; ++i) prior.push_back("p" + std::to_string(i));
    for (const auto& s : segs) {
      const auto ex = assemble_example(s, prior.empty() ? std::nullopt : std::optional(join(prior, " ")), cfg, kTok);
      const std::size_t target = kTok.count(ex.target_text);
      const std::size_t prior_tokens = ex.prior_text ? kTok.count(*ex.prior_text) : 0;
      c.expect(target + prior_tokens <= 512u, at + ": combined length over 512");
      const std::size_t budget = 512 - target;
      const std::size_t keep = std::min<std::size_t>(budget, prior.size());
      std::vector<std::string> window =
          cfg.truncation_side == TruncationSide::keep_start
              ? std::vector<std::string>(prior.begin(), prior.begin() + keep)
              : std::vector<std::string>(prior.end() - keep, prior.end());
      const auto got = ex.prior_text ? kTok.tokenize(*ex.prior_text) : std::vector<std::string>{};
      c.expect(got == window, at + ": prior window");
    }

    const std::size_t budget = std::uniform_int_distribution<std::size_t>(0, 1100)(rng);
    const std::size_t keep = std::min(budget, toks.size());
    c.expect(truncate_prior(toks, budget, TruncationSide::keep_start) ==
                 std::vector<std::string>(toks.begin(), toks.begin() + keep),
             at + ": keep_start window");
    c.expect(truncate_prior(toks, budget, TruncationSide::keep_end) ==
                 std::vector<std::string>(toks.end() - keep, toks.end()),
             at + ": keep_end window");
  }
  c.note = "1000 sequences";
}

// ---- 5: agreement fixture ------------------------------------------------------

void agreement(Check& c) {
  // Three annotator pairs, 100 examples each. For each move, pair p disagrees
  // on 100 * (1 - target) + offset[p] examples, so every annotator's score is
  // known and the six-way mean is the target. 63 examples per pair share
  // off_task; the rest have disjoint, non-empty selections.
  const std::map<Move, double> target = {{Move::adding_on, 0.81},
                                         {Move::connecting, 0.97},
                                         {Move::eliciting, 0.90},
                                         {Move::probing, 0.91},
                                         {Move::revoicing, 0.93}};
  const int offset[3] = {-3, 0, 3};
  std::vector<AnnotationRecord> records;
  std::map<std::string, std::map<Move, int>> planted;  // annotator -> disagreements
  for (int p = 0; p < 3; ++p) {
    const std::string a = "ann-" + std::to_string(2 * p + 1), b = "ann-" + std::to_string(2 * p + 2);
    for (int i = 0; i < 100; ++i) {
      AnnotationRecord ra{"p" + std::to_string(p) + "-e" + std::to_string(i), a, {}};
      AnnotationRecord rb{ra.example_id, b, {}};
      if (i < 63) {
        ra.labels.off_task = rb.labels.off_task = true;
      } else {
        ra.labels.poor_transcription = true;
      }
      int k = 0;
      for (const auto& [move, t] : target) {
        const int d = static_cast<int>(std::lround(100 * (1 - t))) + offset[p];
        // Spread each move's disagreements so they start at different rows.
        const int row = (i + 17 * k++) % 100;
        if (row < d) rb.labels.set(move, true);
      }
      records.push_back(ra);
      records.push_back(rb);
    }
  }
  for (const auto& [move, t] : target) {
    const auto rep = pairwise_agreement(records, move);
    c.expect(rep.per_annotator.size() == 6u, std::string(move_name(move)) + ": annotators");
    c.expect(std::abs(rep.mean - t) <= 1e-9,
             std::string(move_name(move)) + ": mean " + fmt(rep.mean));
  }
  const double overlap = any_label_overlap_rate(records);
  c.expect(std::abs(overlap - 0.63) <= 1e-9, "overlap " + fmt(overlap));
  c.note = "300 examples, 6 annotators";
}

// ---- 6: clustered SE oracle ---------------------------------------------------

void clustered_se(Check& c) {
  auto d = clustered_data(200, 20, 4, 6);
  std::vector<std::string> names = {"a", "b", "c", "d"};
  const auto fit = fit_ols(d.x, d.y, names);
  const auto cr = cluster_robust_se(fit, d.clusters);
  const auto oracle = brute_force_cr1(d.x, d.y, d.clusters);
  for (int i = 0; i < 5; ++i) {
    const double rel = std::abs(cr.standard_errors(i) - oracle.se(i)) / oracle.se(i);
    c.expect(rel <= 1e-8, "CR1 se[" + std::to_string(i) + "] rel " + fmt(rel));
  }
  const double cov_rel =
      (cr.covariance - oracle.covariance).cwiseAbs().maxCoeff() / oracle.covariance.cwiseAbs().maxCoeff();
  c.expect(cov_rel <= 1e-8, "CR1 covariance rel " + fmt(cov_rel));

  // Singleton clusters: G/(G-1) * (N-1)/(N-k) collapses to HC1's N/(N-k).
  std::vector<std::string> singles;
  for (int i = 0; i < 200; ++i) singles.push_back("r" + std::to_string(i));
  const auto cs = cluster_robust_se(fit, singles);
  const Eigen::MatrixXd hc1 = hc1_covariance(fit);
  const double s_rel = (cs.covariance - hc1).cwiseAbs().maxCoeff() / hc1.cwiseAbs().maxCoeff();
  c.expect(s_rel <= 1e-10, "singleton vs HC1 rel " + fmt(s_rel));
  // HC1 against per-row loops.
  const Eigen::MatrixXd dm = with_intercept(d.x);
  const Eigen::MatrixXd bread = (dm.transpose() * dm).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 200; ++i) {
    const double e = fit.residuals(i);
    meat += e * e * dm.row(i).transpose() * dm.row(i);
  }
  const Eigen::MatrixXd hc1_loop = 200.0 / 195.0 * bread * meat * bread;
  const double h_rel =
      (hc1_covariance(fit) - hc1_loop).cwiseAbs().maxCoeff() / hc1_loop.cwiseAbs().maxCoeff();
  c.expect(h_rel <= 1e-10, "HC1 vs loops rel " + fmt(h_rel));
  c.note = "max rel " + fmt(std::max(cov_rel, s_rel));
}

// ---- 7: coefficient recovery -----------------------------------------------------

void recovery(Check& c) {
  int covered = 0;
  RegressionSpec spec;
  spec.outcome = Outcome::subsequent_attendance;
  spec.predictor_move = Move::connecting;
  spec.unit = AnalysisUnit::transcript;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    synthetic::RegressionDataOptions o;
    o.seed = seed;
    const auto data = synthetic::make_regression_data(o);
    const auto cells = run_table(data.features, data.outcomes, {spec});
    if (cells.size() != 1 || !cells[0].ok) {
      c.expect(false, "seed " + std::to_string(seed) + ": fit failed");
      continue;
    }
    if (std::abs(cells[0].beta() - 0.05) <= 2.0 * cells[0].se()) ++covered;
  }
  c.expect(covered >= 95, "covered " + std::to_string(covered) + "/100");
  c.note = std::to_string(covered) + "/100 within 2 SE";
}

// ---- 8: determinism -----------------------------------------------------------

void determinism(Check& c) {
  const fs::path corpus = fs::path(TALKMOVES_SOURCE_DIR) / "data" / "synthetic";
  TempDir tmp("accept");
  const auto a = config_in(corpus, tmp / "a");
  const auto b = config_in(corpus, tmp / "b");
  c.expect(a.run_seed() == 7, "bundled config seed is not 7");
  c.expect(a.backend == BackendKind::linear_baseline, "bundled config backend");
  run_all(a);
  run_all(b);
  const OutputLayout la{a.output_dir}, lb{b.output_dir};
  for (auto f : {&OutputLayout::predictions, &OutputLayout::features,
                 &OutputLayout::regression_csv, &OutputLayout::regression_txt}) {
    c.expect(read_file((la.*f)()) == read_file((lb.*f)()), "differs: " + (la.*f)().filename().string());
  }

  // Interrupt after a few sessions, then resume.
  auto part = config_in(corpus, tmp / "c");
  run_until_infer(part);
  std::atomic<bool> cancel{false};
  int done = 0;
  bool interrupted = false;
  try {
    run_infer(part, &cancel, [&](const std::string&, bool) {
      if (++done == 5) cancel = true;
    });
  } catch (const IncompleteRunError&) {
    interrupted = true;
  }
  c.expect(interrupted, "inference was not interrupted");
  c.expect(!fs::exists(OutputLayout{part.output_dir}.predictions()), "partial predictions written");
  part.resume = true;
  run_infer(part);
  run_after_infer(part);
  const OutputLayout lc{part.output_dir};
  for (auto f : {&OutputLayout::predictions, &OutputLayout::features,
                 &OutputLayout::regression_csv}) {
    c.expect(read_file((la.*f)()) == read_file((lc.*f)()), "resumed differs: " + (la.*f)().filename().string());
  }
  c.note = std::to_string(load_sessions(la.sessions()).size()) + " sessions";
}

// ---- 9: separable corpus ----------------------------------------------------------

void separable(Check& c) {
  synthetic::CorpusOptions o;
  o.sessions = 60;
  o.instructor_turns = 40;
  o.seed = 11;
  const auto corpus = synthetic::make_corpus(o);
  auto examples = all_examples(corpus.sessions, {}, kTok);
  attach_labels(examples, corpus.annotations);
  std::vector<AnnotationExample> labeled_ex;
  for (auto& e : examples)
    if (e.gold) labeled_ex.push_back(e);
  const auto split = train_test_split(labeled_ex, 0.8, derive_seed(11, "split"));
  LinearBaselineBackend backend;
  std::ostringstream scores;
  for (Move m : kAllMoves) {
    auto cfg = best_config_for(m);
    cfg.training.seed = derive_seed(11, "train:" + std::string(move_name(m)));
    const auto model = train_move_model(m, split.train, cfg.preprocess, cfg.training, backend, kTok);
    const auto r = evaluate(model, backend, split.test, model.threshold(), kTok);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%s=%.3f", scores.tellp() ? " " : "",
                  std::string(move_name(m)).c_str(), r.f1);
    scores << buf;
    c.expect(r.f1 >= 0.95, std::string(move_name(m)) + ": F1 " + fmt(r.f1));
  }
  c.note = scores.str();
}

// ---- 10: remote client --------------------------------------------------------------

void remote_contract(Check& c) {
  MockService svc("secret");
  RemoteClientOptions opt;
  opt.api_key = "secret";
  opt.base_url = svc.base_url();
  opt.poll_interval_seconds = 0.01;
  opt.poll_deadline_seconds = 2.0;

  AnnotationExample with_prior, bare;
  with_prior.target_text = "So you are saying the slope is 2?";
  with_prior.prior_text = "STUDENT: the slope is \"two\"";
  bare.target_text = "Anybody want to share?";
  std::vector<LabeledExample> train(2);
  train[0].example = with_prior;
  train[0].positive = true;
  train[1].example = bare;
  RemoteCompletionBackend backend(opt);
  TrainingConfig tc;
  tc.epochs = 4;
  const auto state = backend.fit(train, tc);

  const std::string expected =
      "{\"prompt\":\"Context: STUDENT: the slope is \\\"two\\\"\\n\\nUtterance: So you are saying the "
      "slope is 2?\\n\\n###\\n\\n\",\"completion\":\" yes\"}\n"
      "{\"prompt\":\"Utterance: Anybody want to share?\\n\\n###\\n\\n\",\"completion\":\" no\"}\n";
  const auto ups = svc.uploads();
  c.expect(ups.size() == 1 && ups[0].content == expected, "uploaded bytes differ");
  c.expect(ups.size() == 1 && ups[0].purpose == "fine-tune", "upload purpose");
  const auto jobs = svc.jobs();
  c.expect(jobs.size() == 1 && jobs[0].value("n_epochs", 0) == 4, "fine-tune epochs");

  // Auth: a missing key fails before any request; a rejected key uploads nothing.
  const int before = svc.requests();
  RemoteClientOptions none = opt;
  none.api_key.clear();
  bool auth = false;
  try {
    RemoteCompletionBackend(none).fit(train, tc);
  } catch (const AuthError&) {
    auth = true;
  }
  c.expect(auth && svc.requests() == before, "missing key reached the service");
  RemoteClientOptions wrong = opt;
  wrong.api_key = "nope";
  auth = false;
  try {
    RemoteCompletionBackend(wrong).fit(train, tc);
  } catch (const AuthError&) {
    auth = true;
  }
  c.expect(auth && svc.uploads().size() == 1, "rejected key uploaded data");

  // Predictions land in [0, 1] for every response shape.
  std::mt19937_64 rng(10);
  int shape = 0;
  svc.set_responder([&](const std::string&, const std::string&) {
    std::normal_distribution<double> z(0.0, 3.0);
    const double a = -std::abs(z(rng)), b = -std::abs(z(rng));
    nlohmann::json top;
    switch (shape++ % 5) {
      case 0: top = {{" yes", a}, {" no", b}}; break;
      case 1: top = {{" yes", a}}; break;
      case 2: top = {{" no", b}}; break;
      case 3: top = {{" maybe", a}}; break;
      default: top = {{" yes", 2.0}}; break;
    }
    return nlohmann::json{{"text", shape % 2 ? " yes" : " no"},
                          {"logprobs", {{"top_logprobs", nlohmann::json::array({top})}}}};
  });
  const auto model = backend.load_state(state->to_json());
  for (int i = 0; i < 50; ++i) {
    const double p = backend.predict_probability(*model, i % 2 ? with_prior : bare);
    c.expect(p >= 0.0 && p <= 1.0, "probability " + fmt(p));
  }
  const auto comps = svc.completions();
  c.expect(!comps.empty() && comps.back().value("prompt", "") == remote_prompt(with_prior),
           "completion prompt");
  c.note = std::to_string(svc.requests()) + " requests";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "metric exactness", 1.0, metric_exactness},
      {2, "balancing law", 5.0, balancing_law},
      {3, "best-config registry", 1.0, registry},
      {4, "segmentation and truncation", 10.0, segmentation},
      {5, "agreement fixture", 1.0, agreement},
      {6, "clustered SE oracle", 2.0, clustered_se},
      {7, "coefficient recovery", 30.0, recovery},
      {8, "end-to-end determinism", 120.0, determinism},
      {9, "separable corpus", 60.0, separable},
      {10, "remote client contract", 5.0, remote_contract},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_seconds) {
      check.failures.push_back("runtime " + fmt(secs) + " s over budget " + fmt(cr.budget_seconds) + " s");
    }
    const bool ok = check.failures.empty();
    failed += ok ? 0 : 1;
    char head[160];
    std::snprintf(head, sizeof head, "[%s] AC%-2d %-30s %8.3f s", ok ? "PASS" : "FAIL", cr.id,
                  cr.title.c_str(), secs);
    std::cout << head;
    if (!check.note.empty()) std::cout << "  (" << check.note << ")";
    std::cout << "\n";
    for (std::size_t i = 0; i < check.failures.size() && i < 5; ++i) {
      std::cout << "       - " << check.failures[i] << "\n";
    }
    if (check.failures.size() > 5) {
      std::cout << "       - ... " << check.failures.size() - 5 << " more\n";
    }
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed\n" : "all criteria passed\n");
  return failed ? 1 : 0;
}

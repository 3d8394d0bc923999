// Generates a rule-labelled synthetic corpus in the raw ingest layout.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "talkmoves/errors.hpp"
#include "talkmoves/synthetic.hpp"

int main(int argc, char** argv) {
  using namespace talkmoves;
  CLI::App app{"Write a synthetic talk-move corpus", "talkmoves-synth"};
  std::string out;
  synthetic::CorpusOptions opts;
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--seed", opts.seed, "generator seed")->capture_default_str();
  app.add_option("--sessions", opts.sessions, "number of sessions")->capture_default_str();
  app.add_option("--instructors", opts.instructors, "number of instructors")->capture_default_str();
  app.add_option("--turns", opts.instructor_turns, "instructor turns per session")
      ->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    const auto corpus = synthetic::make_corpus(opts);
    synthetic::write_raw_corpus(corpus, out, opts.seed);
    std::cout << "wrote " << corpus.sessions.size() << " sessions and "
              << corpus.annotations.size() << " annotation records to " << out << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
    return e.kind() == "ValidationError" ? 1 : 2;
  }
}

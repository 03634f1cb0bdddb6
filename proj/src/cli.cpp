#include "apd/cli.hpp"

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "apd/archive.hpp"
#include "apd/config.hpp"
#include "apd/log.hpp"
#include "apd/service.hpp"
#include "apd/train.hpp"

namespace apd {

namespace {

// Screening-time settings a config file may change on a trained archive:
// the sanitize policy and how the remote embedder is reached.
std::shared_ptr<const ModelBundle> load_models(const std::string& models, const std::string& config_path) {
  auto archive = load_archive(models);
  if (!config_path.empty()) {
    const auto c = load_config(config_path);
    archive.bundle.sanitize = c.sanitize;
    archive.bundle.embedder.endpoint = c.embedder.endpoint;
    archive.bundle.embedder.timeout_ms = c.embedder.timeout_ms;
    archive.bundle.embedder.fallback_to_hash = c.embedder.fallback_to_hash;
  }
  archive.bundle.validate();
  return std::make_shared<const ModelBundle>(std::move(archive.bundle));
}

std::set<std::string> read_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::set<std::string> words;
  for (std::string line; std::getline(in, line);) {
    for (auto& t : tokenize(line)) words.insert(std::move(t));
  }
  return words;
}

struct Args {
  std::string config, out, dataset, models, text, input, triggers, triggers_out, host = "127.0.0.1";
  int port = 8080;
  double m = 0, ln_h = 0, delta = 0, emp = 0;
};

int run_synth(const Args& a, std::ostream& out) {
  const auto config = load_config(a.config);
  if (!config.synth) throw Error("config has no \"synth\" section");
  const auto corpus = synth_corpus(*config.synth);
  save_dataset(a.out, corpus);
  if (!a.triggers_out.empty()) {
    std::ofstream t(a.triggers_out, std::ios::trunc);
    for (const auto& w : synth_vocabulary(*config.synth).trigger) t << w << '\n';
    if (!t) throw Error("cannot write " + a.triggers_out);
  }
  log::info("wrote {} examples to {}", corpus.size(), a.out);
  (void)out;
  return 0;
}

int run_train(const Args& a, std::ostream& out) {
  const auto config = load_config(a.config);
  const auto examples = load_dataset(a.dataset);
  const auto trained = train_bundle(examples, config);
  save_archive(a.out, config, trained.bundle);
  const auto& r = trained.report;
  nlohmann::ordered_json summary;
  summary["examples"] = r.examples;
  summary["side_examples"] = r.side_examples;
  summary["skipped"] = r.skipped;
  summary["vae_final_loss"] = r.vae_losses.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.vae_losses.back());
  summary["aid_final_loss"] = r.aid_losses.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.aid_losses.back());
  summary["archive"] = a.out;
  out << summary.dump() << '\n';
  return 0;
}

int run_screen(const Args& a, bool has_text, std::ostream& out, std::ostream& err) {
  const auto bundle = load_models(a.models, a.config);
  if (has_text) {
    const auto prompt = Prompt::from_text(a.text);
    if (prompt.tokens.empty()) throw InvalidArgument("empty prompt");
    out << screen_result_json(prompt, screen(prompt, *bundle)).dump() << '\n';
    return 0;
  }
  std::ifstream in(a.input);
  if (!in) throw Error("cannot open " + a.input);
  int status = 0;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string())
      throw Error("malformed JSON at line " + std::to_string(lineno) + ": expected an object with \"text\"");
    const auto prompt = Prompt::from_text(j["text"].get<std::string>());
    if (prompt.tokens.empty()) {
      err << "error: line " << lineno << ": empty prompt\n";
      out << nlohmann::ordered_json{{"error", "empty prompt"}}.dump() << '\n';
      status = 2;
      continue;
    }
    out << screen_result_json(prompt, screen(prompt, *bundle)).dump() << '\n';
  }
  return status;
}

int run_eval(const Args& a, std::ostream& out) {
  const auto bundle = load_models(a.models, a.config);
  const auto test = load_dataset(a.dataset);
  std::set<std::string> triggers;
  if (!a.triggers.empty()) triggers = read_word_list(a.triggers);
  const auto report = evaluate(test, *bundle, a.triggers.empty() ? nullptr : &triggers);
  out << metrics_json(report).dump(2) << '\n';
  return 0;
}

int run_pac(const Args& a, std::ostream& out) {
  const auto b = pac_bound(a.m, a.ln_h, a.delta, a.emp);
  out << nlohmann::ordered_json{{"hoeffding", b.hoeffding}, {"occam", b.occam}}.dump() << '\n';
  return 0;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  log::init_from_env();
  CLI::App app{"Prompt screening: synthesize data, train, screen, evaluate and serve.", "apd"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Args a;

  auto* synth = app.add_subcommand("synth", "Write a synthetic labeled corpus as JSONL");
  synth->add_option("--config", a.config, "Config file with a synth section")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", a.out, "Output JSONL path")->required();
  synth->add_option("--triggers-out", a.triggers_out, "Also write the trigger vocabulary, one word per line");

  auto* train = app.add_subcommand("train", "Train the VAE and detector and write a model archive");
  train->add_option("--config", a.config, "Config file")->required()->check(CLI::ExistingFile);
  train->add_option("--dataset", a.dataset, "Training JSONL")->required()->check(CLI::ExistingFile);
  train->add_option("--out", a.out, "Archive directory")->required();

  auto* scr = app.add_subcommand("screen", "Screen one prompt or a JSONL file of prompts");
  scr->add_option("--models", a.models, "Archive directory")->required()->check(CLI::ExistingDirectory);
  scr->add_option("--config", a.config, "Override sanitize and embedder endpoint settings")
      ->check(CLI::ExistingFile);
  auto* text_opt = scr->add_option("--text", a.text, "Prompt text");
  auto* input_opt = scr->add_option("--input", a.input, "JSONL with a \"text\" field per line")
                        ->check(CLI::ExistingFile);
  text_opt->excludes(input_opt);

  auto* ev = app.add_subcommand("eval", "Screen a labeled JSONL set and report metrics");
  ev->add_option("--models", a.models, "Archive directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--dataset", a.dataset, "Labeled JSONL")->required()->check(CLI::ExistingFile);
  ev->add_option("--config", a.config, "Override sanitize and embedder endpoint settings")
      ->check(CLI::ExistingFile);
  ev->add_option("--triggers", a.triggers, "Trigger word list; enables the neutralization rate")
      ->check(CLI::ExistingFile);

  auto* srv = app.add_subcommand("serve", "Run the HTTP screening service");
  srv->add_option("--models", a.models, "Archive directory")->required()->check(CLI::ExistingDirectory);
  srv->add_option("--config", a.config, "Override sanitize and embedder endpoint settings")
      ->check(CLI::ExistingFile);
  srv->add_option("--host", a.host, "Bind address")->capture_default_str();
  srv->add_option("--port", a.port, "Bind port")->capture_default_str()->check(CLI::Range(0, 65535));

  auto* pac = app.add_subcommand("pac-bound", "Print the generalization bound for a finite hypothesis class");
  pac->add_option("--m", a.m, "Training set size")->required();
  pac->add_option("--ln-h", a.ln_h, "Log of the hypothesis class size")->required();
  pac->add_option("--delta", a.delta, "Failure probability")->required();
  pac->add_option("--emp", a.emp, "Empirical error")->required();

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (scr->parsed() && text_opt->count() == 0 && input_opt->count() == 0)
      throw CLI::RequiredError("screen needs --text or --input");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return 1;
  }

  try {
    if (synth->parsed()) return run_synth(a, out);
    if (train->parsed()) return run_train(a, out);
    if (scr->parsed()) return run_screen(a, text_opt->count() > 0, out, err);
    if (ev->parsed()) return run_eval(a, out);
    if (srv->parsed()) {
      serve(load_models(a.models, a.config), a.host, a.port);
      return 0;
    }
    if (pac->parsed()) return run_pac(a, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace apd

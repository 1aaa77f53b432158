#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "httplib.h"

#include "clasp/contrastive/container.hpp"
#include "clasp/contrastive/train.hpp"
#include "clasp/dataset/generator.hpp"
#include "clasp/dataset/io.hpp"
#include "clasp/eval/harness.hpp"
#include "clasp/interface/cli.hpp"
#include "clasp/interface/service.hpp"
#include "clasp/retrieval/index.hpp"

namespace clasp::interface {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Specs = std::vector<SettingSpec>;

const Specs kGenSpecs = {
    {"size", json(std::uint64_t{1000}), "number of examples"},
    {"length", json(std::uint64_t{2048}), "samples per signal"},
    {"seed", json(std::uint64_t{7}), "generator seed"},
    {"out", json("data.jsonl"), "output JSONL path"},
    {"preset", json("sushi"), "sushi (2048-point) or truce (12-point, nine-word captions)"},
};

const Specs kTrainSpecs = {
    {"data", json(""), "corpus JSONL"},
    {"epochs", json(std::uint64_t{30}), "training epochs"},
    {"batch-size", json(std::uint64_t{32}), "pairs per batch"},
    {"lr", json(1e-3), "Adam learning rate"},
    {"seed", json(std::uint64_t{7}), "split, initialisation and shuffle seed"},
    {"dim", json(std::uint64_t{64}), "shared embedding dimension"},
    {"normalize", json(true), "l2-normalise embeddings before the similarity matrix"},
    {"min-count", json(std::uint64_t{1}), "vocabulary frequency cutoff"},
    {"keep", json("best"), "checkpoint to write: best (lowest validation loss) or last"},
    {"out", json("model.ckpt"), "checkpoint path"},
    {"log", json(""), "optional JSON training log path"},
};

const Specs kIndexSpecs = {
    {"model", json(""), "checkpoint"},
    {"data", json(""), "corpus JSONL"},
    {"split", json("all"), "all, train, val or test"},
    {"seed", json(std::uint64_t{7}), "split seed"},
    {"out", json("index.bin"), "index path"},
};

const Specs kSearchSpecs = {
    {"model", json(""), "checkpoint"},
    {"index", json(""), "index built by the index command"},
    {"query", json(""), "natural-language query"},
    {"k", json(std::uint64_t{10}), "results to return"},
};

const Specs kEvalSpecs = {
    {"model", json(""), "checkpoint"},
    {"data", json(""), "corpus JSONL"},
    {"seed", json(std::uint64_t{7}), "split seed (must match training)"},
    {"k", json(std::uint64_t{10}), "cutoff for AP@k"},
    {"report", json("report.json"), "JSON report path"},
    {"csv", json(""), "optional per-query CSV path"},
};

const Specs kServeSpecs = {
    {"model", json(""), "checkpoint"},
    {"index", json(""), "signal index"},
    {"data", json(""), "corpus JSONL supplying series and captions"},
    {"bind", json("127.0.0.1:8080"), "host:port"},
    {"static", json("webui/dist"), "directory served at /"},
};

struct Command {
  std::string name;
  const Specs* specs;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> flags;
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

std::string require(const ResolvedConfig& c, const std::string& key) {
  auto v = c.get<std::string>(key);
  if (v.empty()) throw UsageError("--" + key + " is required");
  return v;
}

std::vector<dataset::LabeledExample> pick_split(const std::vector<dataset::LabeledExample>& corpus,
                                                const std::string& which, std::uint64_t seed) {
  if (which == "all") return corpus;
  auto split = dataset::split_dataset(corpus, seed);
  if (which == "train") return split.train;
  if (which == "val") return split.val;
  if (which == "test") return split.test;
  throw UsageError("--split must be all, train, val or test");
}

int run_gen(const ResolvedConfig& c, std::ostream& out) {
  const auto preset = c.get<std::string>("preset");
  dataset::GeneratorConfig gc;
  if (preset == "truce") {
    gc = dataset::truce_config(c.get<std::size_t>("size"));
  } else if (preset != "sushi") {
    throw UsageError("--preset must be sushi or truce");
  }
  gc.size = c.get<std::size_t>("size");
  if (preset == "sushi" || c.sources.at("length") != "default") gc.length = c.get<std::size_t>("length");
  const auto examples = dataset::generate_dataset(gc, c.get<std::uint64_t>("seed"));
  dataset::save_jsonl(examples, require(c, "out"));
  out << "wrote " << examples.size() << " examples to " << c.get<std::string>("out") << "\n";
  return kExitOk;
}

int run_train(const ResolvedConfig& c, std::ostream& out, std::ostream& err) {
  const auto corpus = dataset::load_jsonl(require(c, "data"));
  const auto seed = c.get<std::uint64_t>("seed");
  const auto split = dataset::split_dataset(corpus, seed);
  contrastive::TrainConfig tc;
  tc.epochs = c.get<std::size_t>("epochs");
  tc.batch_size = c.get<std::size_t>("batch-size");
  tc.lr = c.get<double>("lr");
  tc.seed = seed;
  tc.embed_dim = c.get<std::size_t>("dim");
  tc.normalize = c.get<bool>("normalize");
  tc.vocab_min_count = c.get<std::size_t>("min-count");
  const auto keep = c.get<std::string>("keep");
  if (keep != "best" && keep != "last") throw UsageError("--keep must be best or last");

  const auto result = contrastive::train(split.train, split.val, tc, [&](const contrastive::EpochLog& e) {
    err << "epoch " << e.epoch << " train_loss " << e.train_loss << " val_loss " << e.val_loss
        << " tau " << e.temperature << "\n";
  });
  const auto& model = keep == "best" ? result.best : result.model;
  contrastive::save_checkpoint(model, require(c, "out"));
  if (const auto log_path = c.get<std::string>("log"); !log_path.empty()) {
    json log;
    log["initial_loss"] = result.log.initial_loss;
    log["best_epoch"] = result.log.best_epoch;
    json epochs = json::array();
    for (const auto& e : result.log.epochs) {
      epochs.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_loss", e.val_loss},
                        {"temperature", e.temperature}});
    }
    log["epochs"] = epochs;
    contrastive::write_file(log_path, log.dump(2) + "\n");
  }
  out << "wrote " << keep << " model (fingerprint " << model.fingerprint() << ") to "
      << c.get<std::string>("out") << "\n";
  return kExitOk;
}

int run_index(const ResolvedConfig& c, std::ostream& out) {
  const auto model = contrastive::load_checkpoint(require(c, "model"));
  const auto corpus = dataset::load_jsonl(require(c, "data"));
  const auto items = pick_split(corpus, c.get<std::string>("split"), c.get<std::uint64_t>("seed"));
  std::vector<dataset::SignalSeries> signals;
  for (const auto& ex : items) signals.push_back(ex.signal);
  const auto index = retrieval::build_index(signals, model);
  retrieval::save_index(index, require(c, "out"));
  out << "indexed " << index.size() << " signals to " << c.get<std::string>("out") << "\n";
  return kExitOk;
}

int run_search(const ResolvedConfig& c, std::ostream& out) {
  const auto model = contrastive::load_checkpoint(require(c, "model"));
  const auto index = retrieval::load_index(require(c, "index"));
  const auto k = c.get<std::size_t>("k");
  if (k == 0) throw UsageError("--k must be at least 1");
  const auto result = retrieval::query_by_text(require(c, "query"), index, model, k);
  json j;
  j["query"] = result.query;
  j["results"] = json::array();
  for (const auto& h : result.hits) j["results"].push_back({{"id", h.id}, {"score", h.score}});
  out << j.dump(2) << "\n";
  return kExitOk;
}

int run_eval(const ResolvedConfig& c, std::ostream& out) {
  const auto model = contrastive::load_checkpoint(require(c, "model"));
  const auto corpus = dataset::load_jsonl(require(c, "data"));
  const auto split = dataset::split_dataset(corpus, c.get<std::uint64_t>("seed"));
  std::vector<std::string> train_ids;
  for (const auto& ex : split.train) train_ids.push_back(ex.signal.id);
  eval::EvalConfig ec;
  ec.k = c.get<std::size_t>("k");
  if (ec.k == 0) throw UsageError("--k must be at least 1");
  const auto report = eval::run_eval(model, train_ids, split.test, ec);
  contrastive::write_file(require(c, "report"), eval::report_to_json(report));
  if (const auto csv = c.get<std::string>("csv"); !csv.empty()) {
    contrastive::write_file(csv, eval::report_to_csv(report));
  }
  for (const auto v : eval::kAllVariants) {
    const std::string name(eval::to_string(v));
    out << name << " class_label mAP@" << ec.k << " " << report.map(eval::kClassOracle, name);
    for (const double ts : ec.tfidf_thresholds) {
      out << "  " << eval::oracle_name(ts) << " " << report.map(eval::oracle_name(ts), name);
    }
    out << "\n";
  }
  return kExitOk;
}

int run_serve(const ResolvedConfig& c, std::ostream& out, std::ostream& err) {
  auto model = contrastive::load_checkpoint(require(c, "model"));
  auto index = retrieval::load_index(require(c, "index"));
  auto corpus = dataset::load_jsonl(require(c, "data"));
  const auto bind = c.get<std::string>("bind");
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw UsageError("--bind must be host:port");
  const auto host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--bind must be host:port");
  }
  std::unique_ptr<Service> service;
  try {
    service = std::make_unique<Service>(std::move(model), std::move(index), std::move(corpus));
  } catch (const StaleIndexError& e) {
    err << "refusing to start (409): " << e.what() << "\n";
    return kExitRuntime;
  }
  httplib::Server server;
  register_routes(server, *service, std::filesystem::path(c.get<std::string>("static")));
  out << "serving on " << host << ":" << port << "\n" << std::flush;
  if (!server.listen(host, port)) throw Error("cannot listen on " + bind);
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
             const EnvLookup& env) {
  CLI::App app{"contrastive signal-language retrieval"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");

  std::vector<Command> commands;
  for (const auto& [name, specs] : {std::pair{"gen", &kGenSpecs}, std::pair{"train", &kTrainSpecs},
                                    std::pair{"index", &kIndexSpecs}, std::pair{"search", &kSearchSpecs},
                                    std::pair{"eval", &kEvalSpecs}, std::pair{"serve", &kServeSpecs}}) {
    commands.push_back(Command{name, specs, nullptr, {}, {}});
  }
  const std::map<std::string, std::string> descriptions = {
      {"gen", "generate a synthetic corpus"},
      {"train", "train the dual encoder"},
      {"index", "embed signals into a search index"},
      {"search", "query an index with text"},
      {"eval", "mAP@k evaluation on the test split"},
      {"serve", "HTTP/JSON search service"}};
  for (auto& cmd : commands) {
    cmd.app = app.add_subcommand(cmd.name, descriptions.at(cmd.name));
    for (const auto& spec : *cmd.specs) {
      auto* opt = cmd.app->add_option("--" + spec.key, cmd.flags[spec.key], spec.help);
      cmd.options.emplace_back(spec.key, opt);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  for (auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    std::map<std::string, std::string> given;
    for (const auto& [key, opt] : cmd.options) {
      if (opt->count() > 0) given[key] = cmd.flags[key];
    }
    try {
      const json file = config_path.empty() ? json() : load_config_file(config_path);
      const auto resolved = resolve_config(cmd.name, *cmd.specs, given, file, env);
      err << resolved.describe(cmd.name) << "\n";
      if (cmd.name == "gen") return run_gen(resolved, out);
      if (cmd.name == "train") return run_train(resolved, out, err);
      if (cmd.name == "index") return run_index(resolved, out);
      if (cmd.name == "search") return run_search(resolved, out);
      if (cmd.name == "eval") return run_eval(resolved, out);
      if (cmd.name == "serve") return run_serve(resolved, out, err);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const ConfigError& e) {
      err << "usage error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitUsage;
}

}  // namespace clasp::interface

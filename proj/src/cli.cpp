#include "qemine/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "qemine/augment.hpp"
#include "qemine/corpus.hpp"
#include "qemine/encoder.hpp"
#include "qemine/error.hpp"
#include "qemine/gradcheck.hpp"
#include "qemine/mining.hpp"
#include "qemine/stats.hpp"
#include "qemine/synth.hpp"
#include "qemine/train.hpp"

#ifndef QEMINE_VERSION
#define QEMINE_VERSION "dev"
#endif

namespace qemine::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Everything a subcommand might read; unused fields stay at defaults.
struct Options {
  std::uint64_t seed = 42;
  std::string out;
  std::string qe, sts, nli, parallel, valid;
  std::string model, filterModel, stsModel, nliModel, qeModel, feature;
  std::string sideA, sideB, gold, trainA, trainB, trainGold;
  std::string src, tgt, scores;
  std::string tasks = "qe,sts,nli";
  std::string mode;
  std::string threshold;
  std::string loss = "all";
  int epochs = -1;
  int finetuneEpochs = 1;
  std::size_t batch = 32;
  double lr = 1e-3;
  bool untilConvergence = false;
  bool normalize = false;
  std::uint32_t hashDim = 32768, hidden = 256, dim = 128;
  double initScale = 0.1;
  int n = 3;
  double cutoff = 0.7;
  double margin = 1.0;
  std::size_t topn = 10;
  int bins = 10;
  std::size_t count = 1000;
  double corruption = 0.3;
  std::size_t vocab = 200;
  double r12 = 0, r13 = 0, r23 = 0;
  int sampleSize = 0;
  double eps = 1e-4;
};

class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}
  json& config() { return config_; }
  void input(const std::string& p) { inputs_.push_back(p); }
  void output(const std::string& p) { outputs_.push_back(p); }

  void write(const fs::path& out, std::uint64_t seed) const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json j;
    j["command"] = command_;
    j["config"] = config_;
    j["seed"] = seed;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["version"] = QEMINE_VERSION;
    j["wall_clock_seconds"] = secs;
    std::ofstream f(fs::path(out.string() + ".manifest.json"), std::ios::trunc);
    if (!f) throw IoError("cannot write manifest for " + out.string());
    f << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  json config_ = json::object();
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<Task> parse_tasks(const std::string& list) {
  std::vector<Task> tasks;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    Task t;
    if (item == "qe") {
      t = Task::kQE;
    } else if (item == "sts") {
      t = Task::kSTS;
    } else if (item == "nli") {
      t = Task::kNLI;
    } else {
      throw UsageError("unknown task '" + item + "' (expected qe, sts, nli)");
    }
    if (std::find(tasks.begin(), tasks.end(), t) == tasks.end()) tasks.push_back(t);
  }
  if (tasks.empty()) throw UsageError("--tasks is empty");
  std::sort(tasks.begin(), tasks.end());
  return tasks;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required flag ") + flag);
}

TrainConfig train_config(const Options& o, int defaultEpochs) {
  TrainConfig c;
  c.seed = o.seed;
  c.batchSize = o.batch;
  c.adam.learningRate = o.lr;
  c.featurizer.hashDim = o.hashDim;
  c.hidden = o.hidden;
  c.dim = o.dim;
  c.initScale = o.initScale;
  const int epochs = o.epochs >= 0 ? o.epochs : defaultEpochs;
  c.multitaskEpochs = epochs;
  c.epochs = epochs;
  c.finetuneEpochs = o.finetuneEpochs;
  c.untilConvergence = o.untilConvergence;
  return c;
}

json train_config_json(const TrainConfig& c) {
  json tasks = json::array();
  for (auto t : c.tasks) tasks.push_back(std::string(task_name(t)));
  return {{"multitask_epochs", c.multitaskEpochs},
          {"finetune_epochs", c.finetuneEpochs},
          {"epochs", c.epochs},
          {"batch_size", c.batchSize},
          {"learning_rate", c.adam.learningRate},
          {"tasks", tasks},
          {"until_convergence", c.untilConvergence},
          {"hash_dim", c.featurizer.hashDim},
          {"hidden", c.hidden},
          {"dim", c.dim},
          {"init_scale", c.initScale}};
}

void save_feature_predictor(const fs::path& path, const FeatureQePredictor& p,
                            const std::vector<std::string>& backbonePaths) {
  const auto& h = p.head;
  json j{{"format", "qemine-feature-qe"}, {"version", 1}, {"backbones", backbonePaths},
         {"input", h.input}, {"hidden", h.hidden}, {"W1", h.W1}, {"b1", h.b1}, {"w2", h.w2}, {"b2", h.b2}};
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump() << '\n';
}

FeatureQePredictor load_feature_predictor(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "qemine-feature-qe") throw FormatError(path.string() + ": not a feature QE file");
  FeatureQePredictor p;
  for (const auto& b : j.at("backbones")) p.backbones.push_back(load_model(b.get<std::string>()).model);
  p.head.input = j.at("input").get<std::uint32_t>();
  p.head.hidden = j.at("hidden").get<std::uint32_t>();
  p.head.W1 = j.at("W1").get<std::vector<float>>();
  p.head.b1 = j.at("b1").get<std::vector<float>>();
  p.head.w2 = j.at("w2").get<std::vector<float>>();
  p.head.b2 = j.at("b2").get<float>();
  return p;
}

int run_synth(const Options& o, std::ostream& out) {
  require(o.out, "--out");
  Manifest m("synth");
  SynthConfig c;
  c.seed = o.seed;
  c.corruptionRate = o.corruption;
  c.vocabularySize = o.vocab;
  const auto corpus = generate_corpus(c, o.count);
  save_synth(o.out, corpus);
  m.config() = {{"count", o.count}, {"corruption", o.corruption}, {"vocab", o.vocab}};
  m.output(o.out);
  m.write(o.out, o.seed);
  out << "wrote synthetic corpus (" << corpus.qe.size() << " QE records) to " << o.out << '\n';
  return kOk;
}

int run_train(const Options& o, std::ostream& out) {
  require(o.qe, "--qe");
  require(o.out, "--out");
  Manifest m("train");
  auto c = train_config(o, 3);
  c.tasks = parse_tasks(o.tasks);
  const auto qe = load_qe(o.qe, o.normalize);
  m.input(o.qe);
  std::vector<STSRecord> sts;
  std::vector<NLIRecord> nli;
  if (c.has_task(Task::kSTS)) {
    require(o.sts, "--sts (task sts is enabled)");
    sts = load_sts(o.sts);
    m.input(o.sts);
  }
  if (c.has_task(Task::kNLI)) {
    require(o.nli, "--nli (task nli is enabled)");
    nli = load_nli(o.nli);
    m.input(o.nli);
  }
  std::vector<QERecord> valid;
  if (!o.valid.empty()) {
    valid = load_qe(o.valid, o.normalize);
    m.input(o.valid);
  }
  const auto result = multitask_train(qe, sts, nli, c, valid);
  save_model(o.out, result.model, result.heads);
  const std::string historyPath = o.out + ".history.csv";
  save_history_csv(historyPath, result.history);
  m.config() = train_config_json(c);
  m.config()["normalize"] = o.normalize;
  m.output(o.out);
  m.output(historyPath);
  m.write(o.out, o.seed);
  out << "trained model written to " << o.out << '\n';
  return kOk;
}

int run_augment(const Options& o, std::ostream& out) {
  require(o.qe, "--qe");
  require(o.out, "--out");
  if (o.mode != "filter" && o.mode != "scorer") throw UsageError("--mode must be 'filter' or 'scorer'");
  Manifest m("augment");
  const auto records = load_qe(o.qe, o.normalize);
  AugmentConfig c{o.n, o.cutoff, o.seed};
  const auto data = o.mode == "filter" ? augment_filtration(records, c) : augment_scorer(records, c);
  save_augmented(o.out, data);
  m.config() = {{"mode", o.mode}, {"n", o.n}, {"cutoff", o.cutoff}, {"normalize", o.normalize}};
  m.input(o.qe);
  m.output(o.out);
  m.write(o.out, o.seed);
  out << "positives=" << data.positives.size() << " negatives=" << data.negatives.size() << '\n';
  return kOk;
}

int run_train_filter(const Options& o, std::ostream& out) {
  require(o.qe, "--qe");
  require(o.out, "--out");
  Manifest m("train-filter");
  const auto records = load_qe(o.qe, o.normalize);
  const auto data = augment_filtration(records, AugmentConfig{o.n, o.cutoff, o.seed});
  auto c = train_config(o, 3);
  History history;
  const auto model = train_filtration(data.positives, data.negatives, c, ContrastiveConfig{o.margin}, &history);
  save_model(o.out, model, HeadSet::zeros(model.dim));
  const std::string historyPath = o.out + ".history.csv";
  save_history_csv(historyPath, history);
  m.config() = train_config_json(c);
  m.config()["n"] = o.n;
  m.config()["cutoff"] = o.cutoff;
  m.config()["margin"] = o.margin;
  m.input(o.qe);
  m.output(o.out);
  m.output(historyPath);
  m.write(o.out, o.seed);
  out << "filtration model written to " << o.out << '\n';
  return kOk;
}

int run_align(const Options& o, std::ostream& out) {
  require(o.model, "--model");
  require(o.parallel, "--parallel");
  require(o.out, "--out");
  Manifest m("align");
  const auto loaded = load_model(o.model);
  const auto parallel = load_parallel(o.parallel);
  auto c = train_config(o, 3);
  const auto result = align_encoders(loaded.model, parallel, c);
  save_model(o.out, result.model, loaded.heads);
  const std::string historyPath = o.out + ".history.csv";
  save_history_csv(historyPath, result.history);
  m.config() = train_config_json(c);
  m.config()["held_out_cosine_before"] = result.heldOutCosineBefore;
  m.config()["held_out_cosine_after"] = result.heldOutCosineAfter;
  m.input(o.model);
  m.input(o.parallel);
  m.output(o.out);
  m.output(historyPath);
  m.write(o.out, o.seed);
  out << "held-out cosine before=" << format_real(result.heldOutCosineBefore)
      << " after=" << format_real(result.heldOutCosineAfter) << '\n';
  return kOk;
}

int run_train_feature(const Options& o, std::ostream& out) {
  require(o.stsModel, "--sts-model");
  require(o.nliModel, "--nli-model");
  require(o.qeModel, "--qe-model");
  require(o.qe, "--qe");
  require(o.out, "--out");
  Manifest m("train-feature");
  const auto sts = load_model(o.stsModel).model;
  const auto nli = load_model(o.nliModel).model;
  const auto qeb = load_model(o.qeModel).model;
  const auto data = load_qe(o.qe, o.normalize);
  auto c = train_config(o, 3);
  History history;
  const auto predictor = train_multiqe_feature(sts, nli, qeb, data, c, &history);
  save_feature_predictor(o.out, predictor, {o.stsModel, o.nliModel, o.qeModel});
  const std::string historyPath = o.out + ".history.csv";
  save_history_csv(historyPath, history);
  m.config() = train_config_json(c);
  for (const auto& p : {o.stsModel, o.nliModel, o.qeModel, o.qe}) m.input(p);
  m.output(o.out);
  m.output(historyPath);
  m.write(o.out, o.seed);
  out << "feature QE predictor written to " << o.out << '\n';
  return kOk;
}

int run_mine_tatoeba(const Options& o, std::ostream& out) {
  require(o.model, "--model");
  require(o.src, "--src");
  require(o.tgt, "--tgt");
  Manifest m("mine-tatoeba");
  const auto loaded = load_model(o.model);
  const auto set = load_tatoeba(o.src, o.tgt);
  const Scorer scorer{loaded.model, loaded.heads.qe};
  const auto matrix = score_matrix(scorer, set.references, set.hypotheses);
  const auto picks = mine_tatoeba(matrix.values);
  const double acc = tatoeba_accuracy(picks);
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + o.out);
    for (std::size_t i = 0; i < picks.size(); ++i) {
      f << i << '\t' << picks[i] << '\t' << format_real(matrix.values.at(i, picks[i])) << '\n';
    }
    m.input(o.model);
    m.input(o.src);
    m.input(o.tgt);
    m.output(o.out);
    m.config() = {{"accuracy", acc}};
    m.write(o.out, o.seed);
  }
  out << "accuracy=" << format_real(acc) << '\n';
  return kOk;
}

int run_mine_bucc(const Options& o, std::ostream& out, std::ostream& err) {
  require(o.filterModel, "--filter-model");
  require(o.model, "--model");
  require(o.sideA, "--a");
  require(o.sideB, "--b");
  require(o.out, "--out");
  MiningConfig c;
  c.topN = o.topn;
  const bool autoThreshold = o.threshold.empty() || o.threshold == "auto";
  if (autoThreshold && o.trainGold.empty()) {
    throw UsageError("mine-bucc needs --threshold VALUE, or --train-gold (with --train-a/--train-b) to tune it");
  }
  if (!autoThreshold) {
    try {
      std::size_t used = 0;
      c.threshold = std::stod(o.threshold, &used);
      if (used != o.threshold.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("--threshold must be a number in [0,1] or 'auto'");
    }
  }
  Manifest m("mine-bucc");
  const auto filter = load_model(o.filterModel).model;
  const auto scorerModel = load_model(o.model);
  const auto corpus = load_bucc(o.sideA, o.sideB, o.gold);
  std::optional<BuccCorpus> training;
  if (autoThreshold) {
    require(o.trainA, "--train-a");
    require(o.trainB, "--train-b");
    training = load_bucc(o.trainA, o.trainB, o.trainGold);
  }
  const Scorer scorer{scorerModel.model, scorerModel.heads.qe};
  const auto result = mine_bucc(corpus, filter, scorer, c, training ? &*training : nullptr);
  {
    std::ofstream f(o.out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + o.out);
    write_mining_tsv(f, result);
  }
  err << "candidates=" << result.candidateCount << " forward=" << result.forwardCount
      << " backward=" << result.backwardCount << " selected=" << result.intersectionCount
      << " threshold=" << format_real(result.threshold);
  json summary{{"threshold", result.threshold},
               {"candidates", result.candidateCount},
               {"forward", result.forwardCount},
               {"backward", result.backwardCount},
               {"selected", result.intersectionCount}};
  if (!corpus.gold.empty()) {
    std::vector<std::pair<std::string, std::string>> predicted;
    for (const auto& p : result.pairs) predicted.emplace_back(p.idA, p.idB);
    const auto prf = f1_score(predicted, corpus.gold);
    err << " precision=" << format_real(prf.precision) << " recall=" << format_real(prf.recall)
        << " f1=" << format_real(prf.f1);
    summary["f1"] = prf.f1;
  }
  err << '\n';
  m.config() = {{"topn", o.topn}, {"threshold_flag", o.threshold.empty() ? "auto" : o.threshold}, {"result", summary}};
  for (const auto& p : {o.filterModel, o.model, o.sideA, o.sideB, o.gold, o.trainA, o.trainB, o.trainGold}) {
    if (!p.empty()) m.input(p);
  }
  m.output(o.out);
  m.write(o.out, o.seed);
  (void)out;
  return kOk;
}

int run_eval_qe(const Options& o, std::ostream& out) {
  require(o.qe, "--qe");
  if (o.model.empty() == o.feature.empty()) throw UsageError("eval-qe needs exactly one of --model or --feature");
  Manifest m("eval-qe");
  const auto data = load_qe(o.qe, o.normalize);
  std::vector<double> preds, labels;
  if (!o.model.empty()) {
    const auto loaded = load_model(o.model);
    for (const auto& r : data) {
      preds.push_back(forward_heads(loaded.model, loaded.heads, r.source, r.target, Task::kQE).score);
      labels.push_back(r.score);
    }
    m.input(o.model);
  } else {
    const auto predictor = load_feature_predictor(o.feature);
    for (const auto& r : data) {
      preds.push_back(predictor.predict(r.source, r.target));
      labels.push_back(r.score);
    }
    m.input(o.feature);
  }
  const double r = pearson(preds, labels);
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + o.out);
    for (std::size_t i = 0; i < preds.size(); ++i) f << format_real(labels[i]) << '\t' << format_real(preds[i]) << '\n';
    m.input(o.qe);
    m.output(o.out);
    m.config() = {{"pearson", r}, {"normalize", o.normalize}};
    m.write(o.out, o.seed);
  }
  out << "pearson=" << format_real(r) << '\n';
  return kOk;
}

int run_williams(const Options& o, std::ostream& out) {
  const auto w = williams_test(o.r12, o.r13, o.r23, o.sampleSize);
  out << "t=" << format_real(w.t) << " df=" << w.df << " p=" << format_real(w.p) << '\n';
  return kOk;
}

int run_hist(const Options& o, std::ostream& out) {
  if (o.qe.empty() == o.scores.empty()) throw UsageError("hist needs exactly one of --qe or --scores");
  std::vector<double> scores;
  if (!o.qe.empty()) {
    for (const auto& r : load_qe(o.qe, o.normalize)) scores.push_back(r.score);
  } else {
    std::ifstream f(o.scores);
    if (!f) throw IoError("cannot open " + o.scores);
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(f, line)) {
      ++lineNo;
      if (line.empty()) continue;
      // last tab-separated column
      const auto tab = line.find_last_of('\t');
      const std::string field = tab == std::string::npos ? line : line.substr(tab + 1);
      try {
        std::size_t used = 0;
        scores.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("unparseable score '" + field + "'", lineNo);
      }
    }
  }
  const auto bins = score_histogram(scores, o.bins);
  if (o.out.empty()) {
    write_histogram_csv(out, bins);
    return kOk;
  }
  Manifest m("hist");
  std::ofstream f(o.out, std::ios::trunc);
  if (!f) throw IoError("cannot write " + o.out);
  write_histogram_csv(f, bins);
  m.config() = {{"bins", o.bins}};
  m.input(o.qe.empty() ? o.scores : o.qe);
  m.output(o.out);
  m.write(o.out, o.seed);
  return kOk;
}

int run_gradcheck(const Options& o, std::ostream& out) {
  std::vector<LossKind> kinds;
  if (o.loss == "all") {
    kinds = {LossKind::kQeMse, LossKind::kStsMse, LossKind::kNliCrossEntropy, LossKind::kContrastive,
             LossKind::kAlignment};
  } else if (auto k = parse_loss_kind(o.loss)) {
    kinds = {*k};
  } else {
    throw UsageError("unknown --loss '" + o.loss + "'");
  }
  std::ostringstream csv;
  csv << "block,max_rel_error\n";
  bool ok = true;
  for (auto k : kinds) {
    const auto report = grad_check(k, o.seed, o.eps);
    for (const auto& b : report.blocks) {
      csv << loss_kind_name(k) << ':' << b.name << ',' << format_real(b.maxRelError) << '\n';
    }
    ok = ok && report.max_error() < 1e-3;
  }
  if (o.out.empty()) {
    out << csv.str();
  } else {
    Manifest m("gradcheck");
    std::ofstream f(o.out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + o.out);
    f << csv.str();
    m.config() = {{"loss", o.loss}, {"eps", o.eps}};
    m.output(o.out);
    m.write(o.out, o.seed);
  }
  return ok ? kOk : kDataError;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quality estimation and parallel corpus mining toolkit", "qemine"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "Seed for all randomness")->capture_default_str();
    s->add_option("--out", o.out, "Output path");
  };
  auto model_shape = [&](CLI::App* s) {
    s->add_option("--epochs", o.epochs, "Training epochs");
    s->add_option("--batch", o.batch, "Batch size")->capture_default_str();
    s->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
    s->add_option("--hash-dim", o.hashDim, "Feature hash dimension F")->capture_default_str();
    s->add_option("--hidden", o.hidden, "Hidden width H")->capture_default_str();
    s->add_option("--dim", o.dim, "Embedding dimension d")->capture_default_str();
    s->add_option("--init-scale", o.initScale, "Std-dev of first-layer weights")->capture_default_str();
  };
  auto normalize = [&](CLI::App* s) { s->add_flag("--normalize", o.normalize, "Min-max normalize QE scores"); };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic bilingual corpus");
  common(synth);
  synth->add_option("--count", o.count, "QE records")->capture_default_str();
  synth->add_option("--corruption", o.corruption, "Word corruption rate")->capture_default_str();
  synth->add_option("--vocab", o.vocab, "Vocabulary size")->capture_default_str();

  auto* train = app.add_subcommand("train", "Multitask training followed by QE fine-tuning");
  common(train);
  model_shape(train);
  normalize(train);
  train->add_option("--qe", o.qe, "QE TSV");
  train->add_option("--sts", o.sts, "STS TSV");
  train->add_option("--nli", o.nli, "NLI TSV");
  train->add_option("--valid", o.valid, "QE validation TSV");
  train->add_option("--tasks", o.tasks, "Enabled tasks, comma separated")->capture_default_str();
  train->add_option("--finetune-epochs", o.finetuneEpochs, "QE-only epochs")->capture_default_str();
  train->add_flag("--until-convergence", o.untilConvergence, "Early-stop phase 1 on validation Pearson");

  auto* augment = app.add_subcommand("augment", "Negative data augmentation");
  common(augment);
  normalize(augment);
  augment->add_option("--qe", o.qe, "QE TSV");
  augment->add_option("--mode", o.mode, "filter | scorer");
  augment->add_option("--n", o.n, "Negatives per source")->capture_default_str();
  augment->add_option("--cutoff", o.cutoff, "Quality cutoff (filter mode)")->capture_default_str();

  auto* trainFilter = app.add_subcommand("train-filter", "Contrastive filtration encoder");
  common(trainFilter);
  model_shape(trainFilter);
  normalize(trainFilter);
  trainFilter->add_option("--qe", o.qe, "QE TSV");
  trainFilter->add_option("--n", o.n, "Negatives per source")->capture_default_str();
  trainFilter->add_option("--cutoff", o.cutoff, "Quality cutoff")->capture_default_str();
  trainFilter->add_option("--margin", o.margin, "Contrastive margin")->capture_default_str();

  auto* align = app.add_subcommand("align", "Cosine alignment toward the target side");
  common(align);
  model_shape(align);
  align->add_option("--model", o.model, "Model file to align");
  align->add_option("--parallel", o.parallel, "Parallel TSV (source, target)");

  auto* trainFeature = app.add_subcommand("train-feature", "Feature-extraction QE head over frozen backbones");
  common(trainFeature);
  model_shape(trainFeature);
  normalize(trainFeature);
  trainFeature->add_option("--sts-model", o.stsModel, "STS backbone");
  trainFeature->add_option("--nli-model", o.nliModel, "NLI backbone");
  trainFeature->add_option("--qe-model", o.qeModel, "QE backbone");
  trainFeature->add_option("--qe", o.qe, "QE TSV");

  auto* mineTatoeba = app.add_subcommand("mine-tatoeba", "Full score-matrix mining with accuracy");
  common(mineTatoeba);
  mineTatoeba->add_option("--model", o.model, "Scoring model");
  mineTatoeba->add_option("--src", o.src, "Reference sentences");
  mineTatoeba->add_option("--tgt", o.tgt, "Hypothesis sentences");

  auto* mineBucc = app.add_subcommand("mine-bucc", "Two-stage mining with mutual best match");
  common(mineBucc);
  mineBucc->add_option("--filter-model", o.filterModel, "Filtration encoder");
  mineBucc->add_option("--model", o.model, "Scoring model");
  mineBucc->add_option("--a", o.sideA, "Side A (id<TAB>sentence)");
  mineBucc->add_option("--b", o.sideB, "Side B (id<TAB>sentence)");
  mineBucc->add_option("--gold", o.gold, "Gold links for evaluation");
  mineBucc->add_option("--topn", o.topn, "Candidates per sentence")->capture_default_str();
  mineBucc->add_option("--threshold", o.threshold, "Score threshold or 'auto'");
  mineBucc->add_option("--train-a", o.trainA, "Training side A (auto threshold)");
  mineBucc->add_option("--train-b", o.trainB, "Training side B (auto threshold)");
  mineBucc->add_option("--train-gold", o.trainGold, "Training gold links (auto threshold)");

  auto* evalQe = app.add_subcommand("eval-qe", "Pearson correlation of predictions with labels");
  common(evalQe);
  normalize(evalQe);
  evalQe->add_option("--model", o.model, "Multitask model");
  evalQe->add_option("--feature", o.feature, "Feature QE predictor");
  evalQe->add_option("--qe", o.qe, "QE TSV");

  auto* williams = app.add_subcommand("williams", "Williams test for dependent correlations");
  williams->add_option("--r12", o.r12, "Correlation between the two systems")->required();
  williams->add_option("--r13", o.r13, "Correlation of system 1 with the reference")->required();
  williams->add_option("--r23", o.r23, "Correlation of system 2 with the reference")->required();
  williams->add_option("--n", o.sampleSize, "Sample size")->required();

  auto* hist = app.add_subcommand("hist", "Score histogram CSV");
  common(hist);
  normalize(hist);
  hist->add_option("--qe", o.qe, "QE TSV (score column)");
  hist->add_option("--scores", o.scores, "One score per line (last tab column)");
  hist->add_option("--bins", o.bins, "Bin count")->capture_default_str();

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  common(gradcheck);
  gradcheck->add_option("--loss", o.loss, "qe-mse | sts-mse | nli-ce | contrastive | alignment | all")
      ->capture_default_str();
  gradcheck->add_option("--eps", o.eps, "Finite-difference step")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (synth->parsed()) return run_synth(o, out);
    if (train->parsed()) return run_train(o, out);
    if (augment->parsed()) return run_augment(o, out);
    if (trainFilter->parsed()) return run_train_filter(o, out);
    if (align->parsed()) return run_align(o, out);
    if (trainFeature->parsed()) return run_train_feature(o, out);
    if (mineTatoeba->parsed()) return run_mine_tatoeba(o, out);
    if (mineBucc->parsed()) return run_mine_bucc(o, out, err);
    if (evalQe->parsed()) return run_eval_qe(o, out);
    if (williams->parsed()) return run_williams(o, out);
    if (hist->parsed()) return run_hist(o, out);
    if (gradcheck->parsed()) return run_gradcheck(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace qemine::cli

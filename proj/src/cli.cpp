// SPDX-License-Identifier: Apache-2.0
#include "vqa/cli.hpp"

#include "CLI11.hpp"
#include <charconv>
#include <cstdlib>
#include <iomanip>
#include "json.hpp"
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "vqa/cca.hpp"
#include "vqa/error.hpp"
#include "vqa/gradcheck.hpp"
#include "vqa/parallel.hpp"
#include "vqa/pipeline.hpp"
#include "vqa/qa_gen.hpp"
#include "vqa/synth.hpp"

namespace vqa {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("VQA_SEED"); env != nullptr && *env != '\0') {
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && p == s.data() + s.size(), ErrorKind::kUsage,
            "VQA_SEED must be an unsigned integer, got '" + std::string(s) + "'");
    return v;
  }
  return 1;
}

// The resolved configuration goes next to the output: inside it for a
// directory, as <file>.config.json for a file.
void echo_config(const fs::path& out, bool is_dir, const json& config) {
  const fs::path path = is_dir ? out / "config.json" : fs::path(out.string() + ".config.json");
  write_text(path, config.dump(2) + "\n");
}

std::vector<std::string> clips_of(const SplitSpec& s, const std::string& split,
                                  const std::vector<FeatureSequence>& clips) {
  if (split == "all") {
    std::vector<std::string> ids;
    for (const auto& c : clips) ids.push_back(c.clip_id);
    return ids;
  }
  if (split == "train") return s.train;
  if (split == "validation") return s.validation;
  if (split == "test") return s.test;
  throw Error(ErrorKind::kUsage, "unknown split '" + split + "' (train, validation, test or all)");
}

EmbeddingTable visual_vectors(const SynthDataset& ds, const std::string& visual_path) {
  if (visual_path.empty()) return visual_table(ds.clips, nullptr);
  return load_embeddings(visual_path);
}

std::vector<RankItem> items_for(const SynthDataset& ds, const EmbeddingTable& visual,
                                const std::string& split) {
  return assemble_items(questions_for(ds.questions, clips_of(ds.splits, split, ds.clips)), visual,
                        ds.words, ds.sentences);
}

template <typename Answer>
std::vector<MetricsRow> grouped_accuracy(const std::vector<RankItem>& items, const std::string& method,
                                         const std::string& split, Answer&& correct) {
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> groups;
  std::size_t hits = 0;
  for (const auto& it : items) {
    const bool ok = correct(it);
    auto& g = groups[{std::string(task_name(it.task)), std::string(difficulty_name(it.difficulty))}];
    g.first += ok ? 1 : 0;
    g.second += 1;
    hits += ok ? 1 : 0;
  }
  std::vector<MetricsRow> rows;
  for (const auto& [key, g] : groups) {
    rows.push_back({key.first, key.second, method, split,
                    static_cast<double>(g.first) / static_cast<double>(g.second), g.second});
  }
  rows.push_back({"all", "all", method, split,
                  items.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(items.size()),
                  items.size()});
  return rows;
}

void emit_metrics(const std::vector<MetricsRow>& rows, const std::string& out_path,
                  std::ostream& out) {
  if (out_path.empty()) {
    out << format_metrics(rows);
  } else {
    write_metrics(out_path, rows);
  }
}

std::string curve_csv(const std::vector<double>& curve) {
  std::string s = "epoch,mean_loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) s += std::to_string(i + 1) + "," + format_double(curve[i]) + "\n";
  return s;
}

// ---------------------------------------------------------------------------

struct SynthOpts {
  std::string dynamics = "sinusoid";
  SynthSpec spec;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_synth(SynthOpts& o, std::ostream& out) {
  o.spec.dynamics = parse_dynamics(o.dynamics);
  o.spec.seed = resolve_seed(o.seed);
  write_dataset(o.out, synth_dataset(o.spec));
  echo_config(o.out, true,
              {{"command", "synth"}, {"dynamics", o.dynamics}, {"clips", o.spec.n_clips},
               {"frames", o.spec.frames}, {"dim", o.spec.dim}, {"candidates", o.spec.candidates},
               {"word_dim", o.spec.word_dim}, {"sent_dim", o.spec.sent_dim},
               {"noise", o.spec.noise}, {"seed", o.spec.seed}});
  out << "wrote " << o.out << "\n";
  return 0;
}

struct PretrainOpts {
  std::string data, split = "train", variant = "present", out;
  SeqAeConfig model;
  TrainConfig train;
  bool raw_loss = false, no_reverse = false;
  std::optional<std::uint64_t> seed;
};

int cmd_pretrain(PretrainOpts& o, std::ostream& out) {
  const SynthDataset ds = load_dataset(o.data);
  require(!ds.clips.empty(), ErrorKind::kDataset, "no clips under " + o.data);
  o.model.variant = parse_variant(o.variant);
  o.model.feat_dim = ds.clips.front().frames.cols();
  o.model.normalize_loss = !o.raw_loss;
  o.model.reverse_present = !o.no_reverse;
  o.train.seed = resolve_seed(o.seed);
  Rng rng(o.train.seed);
  SeqAeModel m = SeqAeModel::init(o.model, rng);
  const PretrainResult r = pretrain(m, select_frames(ds.clips, clips_of(ds.splits, o.split, ds.clips)), o.train);
  write_model(o.out, to_tensors(m));
  write_text(o.out + ".loss.csv", curve_csv(r.epoch_loss));
  echo_config(o.out, false,
              {{"command", "pretrain"}, {"data", o.data}, {"split", o.split}, {"variant", o.variant},
               {"feat_dim", o.model.feat_dim}, {"hidden", o.model.hidden}, {"layers", o.model.layers},
               {"unroll", o.model.unroll}, {"dropout", o.model.dropout}, {"bias", o.model.bias},
               {"normalize_loss", o.model.normalize_loss}, {"reverse_present", o.model.reverse_present},
               {"lr", o.train.lr}, {"rho", o.train.rho}, {"eps", o.train.eps}, {"clip", o.train.clip},
               {"batch", o.train.batch_size}, {"epochs", o.train.epochs},
               {"iterations_per_epoch", o.train.iterations_per_epoch}, {"seed", o.train.seed}});
  for (std::size_t i = 0; i < r.epoch_loss.size(); ++i) {
    out << "epoch " << i + 1 << " loss " << format_double(r.epoch_loss[i]) << "\n";
  }
  return 0;
}

struct RepresentOpts {
  std::string data, model, out;
  bool mean_pool = false;
};

int cmd_represent(RepresentOpts& o, std::ostream& out) {
  require(o.mean_pool != !o.model.empty(), ErrorKind::kUsage,
          "represent needs exactly one of --model and --mean-pool");
  const SynthDataset ds = load_dataset(o.data);
  std::optional<SeqAeModel> m;
  if (!o.mean_pool) m = seq_ae_from_tensors(read_model(o.model));
  const EmbeddingTable t = visual_table(ds.clips, m ? &*m : nullptr);
  write_embeddings(o.out, t);
  echo_config(o.out, false,
              {{"command", "represent"}, {"data", o.data}, {"model", o.model}, {"mean_pool", o.mean_pool}});
  out << "wrote " << t.size() << " vectors to " << o.out << "\n";
  return 0;
}

struct RankOpts {
  std::string data, visual, out;
  RankConfig rank;
  RankTrainConfig train;
  bool select = false;
  std::optional<std::uint64_t> seed;
};

int cmd_train_rank(RankOpts& o, std::ostream& out) {
  const SynthDataset ds = load_dataset(o.data);
  const EmbeddingTable visual = visual_vectors(ds, o.visual);
  const auto train = items_for(ds, visual, "train");
  require(!train.empty(), ErrorKind::kDataset, "no training questions in " + o.data);
  o.rank.visual_dim = train.front().visual.size();
  o.rank.word_dim = train.front().candidates.front().word.size();
  o.rank.sent_dim = train.front().candidates.front().sent.size();
  o.train.seed = resolve_seed(o.seed);

  RankModel model;
  std::vector<double> curve;
  json extra = json::object();
  if (o.select) {
    LambdaSelection sel = select_lambda(o.rank, train, items_for(ds, visual, "validation"), o.train,
                                        default_lambda_grid());
    for (std::size_t i = 0; i < sel.grid.size(); ++i) {
      out << "lambda " << format_double(sel.grid[i]) << " validation " << format_double(sel.accuracy[i])
          << "\n";
    }
    out << "selected lambda " << format_double(sel.best) << "\n";
    extra["validation_accuracy"] = sel.accuracy;
    model = std::move(sel.model);
    o.rank.lambda = model.config.lambda;
  } else {
    Rng rng(o.train.seed);
    model = RankModel::init(o.rank, rng);
    curve = train_ranker(model, train, o.train);
    write_text(o.out + ".loss.csv", curve_csv(curve));
    for (std::size_t i = 0; i < curve.size(); ++i) out << "epoch " << i + 1 << " loss " << format_double(curve[i]) << "\n";
  }
  write_model(o.out, to_tensors(model));
  json cfg = {{"command", "train-rank"}, {"data", o.data}, {"visual", o.visual},
              {"visual_dim", o.rank.visual_dim}, {"word_dim", o.rank.word_dim},
              {"sent_dim", o.rank.sent_dim}, {"word_space", o.rank.word_space},
              {"sent_space", o.rank.sent_space}, {"alpha", o.rank.alpha}, {"beta", o.rank.beta},
              {"lambda", o.rank.lambda}, {"select_lambda", o.select}, {"init_range", o.rank.init_range},
              {"lr", o.train.optim.lr}, {"momentum", o.train.optim.momentum},
              {"epochs", o.train.epochs}, {"seed", o.train.seed}};
  cfg.update(extra);
  echo_config(o.out, false, cfg);
  return 0;
}

struct EvalOpts {
  std::string data, visual, model, split = "test", out;
  unsigned threads = 1;
};

int cmd_eval(EvalOpts& o, std::ostream& out) {
  const SynthDataset ds = load_dataset(o.data);
  const RankModel m = rank_model_from_tensors(read_model(o.model));
  const auto items = items_for(ds, visual_vectors(ds, o.visual), o.split);
  require(o.threads >= 1, ErrorKind::kUsage, "--threads must be >= 1");
  std::vector<std::size_t> answers(items.size());
  parallel_for(items.size(), o.threads, [&](std::size_t i) { answers[i] = answer(m, items[i]); });
  std::size_t idx = 0;
  const auto rows = grouped_accuracy(items, "dual-rank", o.split,
                                     [&](const RankItem& it) { return answers[idx++] == it.correct; });
  emit_metrics(rows, o.out, out);
  if (!o.out.empty()) {
    echo_config(o.out, false,
                {{"command", "eval"}, {"data", o.data}, {"visual", o.visual}, {"model", o.model},
                 {"split", o.split}, {"threads", o.threads}});
  }
  return 0;
}

struct CcaOpts {
  std::string data, visual, split = "test", out;
  std::optional<double> reg;
  std::size_t k = 0;
};

int cmd_cca(CcaOpts& o, std::ostream& out) {
  const SynthDataset ds = load_dataset(o.data);
  const EmbeddingTable visual = visual_vectors(ds, o.visual);
  const auto train = items_for(ds, visual, "train");
  CcaFusion f = fit_fusion(train, o.reg, o.k);
  const FusionSelection sel = select_fusion_weight(f, items_for(ds, visual, "validation"), default_lambda_grid());
  const auto items = items_for(ds, visual, o.split);
  const auto rows = grouped_accuracy(items, "cca", o.split,
                                     [&](const RankItem& it) { return cca_answer(f, it) == it.correct; });
  emit_metrics(rows, o.out, out);
  if (!o.out.empty()) {
    json cfg = {{"command", "cca"}, {"data", o.data}, {"visual", o.visual}, {"split", o.split},
                {"k", o.k}, {"weight", sel.best}, {"validation_accuracy", sel.accuracy},
                {"reg_x_word", f.word.reg_x}, {"reg_y_word", f.word.reg_y},
                {"reg_x_sent", f.sent.reg_x}, {"reg_y_sent", f.sent.reg_y}};
    cfg["reg"] = o.reg ? json(*o.reg) : json("auto");
    echo_config(o.out, false, cfg);
  }
  return 0;
}

struct GenOpts {
  std::string records, vocab, stopwords, pool, words, out;
  std::size_t toy = 0;
  GenConfig gen;
  std::optional<std::uint64_t> seed;
};

int cmd_gen_qa(GenOpts& o, std::ostream& out) {
  o.gen.seed = resolve_seed(o.seed);
  ToyCorpus c;
  if (o.toy > 0) {
    c = make_toy_corpus(o.toy, o.gen.seed);
    write_toy_corpus(fs::path(o.out).parent_path() / "corpus", c);
  } else {
    require(!o.records.empty() && !o.vocab.empty() && !o.pool.empty() && !o.words.empty(),
            ErrorKind::kUsage, "gen-qa needs --records, --vocab, --pool and --words (or --toy)");
    c.records = load_records(o.records);
    c.vocab = o.stopwords.empty() ? parse_vocab(read_text(o.vocab), {}) : load_vocab(o.vocab, o.stopwords);
    c.phrases = read_lines(o.pool);
    c.table = load_embeddings(o.words);
  }
  const auto qs = generate_questions(c.records, c.vocab, build_phrase_pool(c.phrases, c.table), c.table, o.gen);
  write_questions(o.out, qs);
  echo_config(o.out, false,
              {{"command", "gen-qa"}, {"records", o.records}, {"vocab", o.vocab},
               {"stopwords", o.stopwords}, {"pool", o.pool}, {"words", o.words}, {"toy", o.toy},
               {"tau_high", o.gen.hard.tau_high}, {"k", o.gen.hard.k},
               {"min_frequency", o.gen.min_frequency}, {"seed", o.gen.seed}});
  out << "wrote " << qs.size() << " questions to " << o.out << "\n";
  return 0;
}

struct GradOpts {
  std::optional<std::uint64_t> seed;
  std::size_t instances = 20;
};

int cmd_gradcheck(GradOpts& o, std::ostream& out) {
  bool ok = true;
  for (const auto& r : gradcheck_all(resolve_seed(o.seed), o.instances)) {
    out << r.suite << " instances " << r.instances << " max_rel_error " << std::scientific
        << std::setprecision(3) << r.max_rel_error << std::defaultfloat << " seconds "
        << std::fixed << std::setprecision(2) << r.seconds << std::defaultfloat << "\n";
    ok = ok && r.max_rel_error < 1e-4;
  }
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"video question answering toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  SynthOpts synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic dataset");
  s->add_option("--dynamics", synth.dynamics,
                "sinusoid, markov-noninvertible, complementary-channels, event-order or shared-topic");
  s->add_option("--clips", synth.spec.n_clips);
  s->add_option("--frames", synth.spec.frames);
  s->add_option("--dim", synth.spec.dim);
  s->add_option("--candidates", synth.spec.candidates, "0 picks the per-dynamics default");
  s->add_option("--word-dim", synth.spec.word_dim);
  s->add_option("--sent-dim", synth.spec.sent_dim);
  s->add_option("--noise", synth.spec.noise, "negative picks the per-dynamics default");
  s->add_option("--seed", synth.seed);
  s->add_option("--out", synth.out)->required();

  PretrainOpts pre;
  auto* p = app.add_subcommand("pretrain", "train a sequence autoencoder");
  p->add_option("--data", pre.data)->required();
  p->add_option("--split", pre.split, "train, validation, test or all");
  p->add_option("--variant", pre.variant, "present, past or future");
  p->add_option("--hidden", pre.model.hidden);
  p->add_option("--layers", pre.model.layers);
  p->add_option("--unroll", pre.model.unroll);
  p->add_option("--dropout", pre.model.dropout);
  p->add_flag("--bias", pre.model.bias);
  p->add_flag("--raw-loss", pre.raw_loss, "do not divide the loss by the window length");
  p->add_flag("--no-reverse", pre.no_reverse, "present targets in forward order");
  p->add_option("--lr", pre.train.lr);
  p->add_option("--rho", pre.train.rho);
  p->add_option("--eps", pre.train.eps);
  p->add_option("--clip", pre.train.clip);
  p->add_option("--batch", pre.train.batch_size);
  p->add_option("--epochs", pre.train.epochs);
  p->add_option("--iterations", pre.train.iterations_per_epoch, "per epoch; 0 covers every window once");
  p->add_option("--seed", pre.seed);
  p->add_option("--out", pre.out)->required();

  RepresentOpts rep;
  auto* r = app.add_subcommand("represent", "write one visual vector per clip");
  r->add_option("--data", rep.data)->required();
  r->add_option("--model", rep.model);
  r->add_flag("--mean-pool", rep.mean_pool);
  r->add_option("--out", rep.out)->required();

  RankOpts rank;
  auto* t = app.add_subcommand("train-rank", "train the dual-channel ranker");
  t->add_option("--data", rank.data)->required();
  t->add_option("--visual", rank.visual, "EMB-TSV of visual vectors; mean pool if absent");
  t->add_option("--lambda", rank.rank.lambda);
  t->add_flag("--select-lambda", rank.select, "sweep 0..1 on the validation split");
  t->add_option("--alpha", rank.rank.alpha);
  t->add_option("--beta", rank.rank.beta);
  t->add_option("--word-space", rank.rank.word_space);
  t->add_option("--sent-space", rank.rank.sent_space);
  t->add_option("--init-range", rank.rank.init_range);
  t->add_option("--lr", rank.train.optim.lr);
  t->add_option("--momentum", rank.train.optim.momentum);
  t->add_option("--epochs", rank.train.epochs);
  t->add_option("--seed", rank.seed);
  t->add_option("--out", rank.out)->required();

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "accuracy of a trained ranker");
  e->add_option("--data", ev.data)->required();
  e->add_option("--visual", ev.visual);
  e->add_option("--model", ev.model)->required();
  e->add_option("--split", ev.split);
  e->add_option("--threads", ev.threads);
  e->add_option("--out", ev.out, "metrics CSV; stdout if absent");

  CcaOpts cc;
  auto* c = app.add_subcommand("cca", "fit and evaluate the CCA fusion baseline");
  c->add_option("--data", cc.data)->required();
  c->add_option("--visual", cc.visual);
  c->add_option("--reg", cc.reg, "covariance ridge; 1e-4 * trace / D per view if absent");
  c->add_option("--k", cc.k, "components; 0 keeps all");
  c->add_option("--split", cc.split);
  c->add_option("--out", cc.out, "metrics CSV; stdout if absent");

  GenOpts gen;
  auto* g = app.add_subcommand("gen-qa", "generate easy and hard questions");
  g->add_option("--records", gen.records);
  g->add_option("--vocab", gen.vocab);
  g->add_option("--stopwords", gen.stopwords);
  g->add_option("--pool", gen.pool);
  g->add_option("--words", gen.words);
  g->add_option("--toy", gen.toy, "build a toy corpus of this many records instead");
  g->add_option("--tau", gen.gen.hard.tau_high);
  g->add_option("--k", gen.gen.hard.k, "hard candidates including the answer");
  g->add_option("--min-frequency", gen.gen.min_frequency);
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out)->required();

  GradOpts grad;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference checks of every gradient");
  gc->add_option("--seed", grad.seed);
  gc->add_option("--instances", grad.instances);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << "error: usage: " << ex.what() << "\n";
    return 2;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (p->parsed()) return cmd_pretrain(pre, out);
    if (r->parsed()) return cmd_represent(rep, out);
    if (t->parsed()) return cmd_train_rank(rank, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (c->parsed()) return cmd_cca(cc, out);
    if (g->parsed()) return cmd_gen_qa(gen, out);
    if (gc->parsed()) return cmd_gradcheck(grad, out);
  } catch (const Error& ex) {
    err << "error: " << kind_name(ex.kind()) << ": " << ex.what() << "\n";
    return ex.kind() == ErrorKind::kUsage ? 2 : 1;
  } catch (const std::exception& ex) {
    err << "error: internal: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace vqa

// SPDX-License-Identifier: Apache-2.0
#include "vqa/pipeline.hpp"

#include <set>

#include "vqa/error.hpp"
#include "vqa/qa_gen.hpp"

namespace vqa {

namespace {

void put_meta(NamedTensors& t, const std::string& key, double value) {
  t.emplace_back("meta/" + key, Mat(1, 1, value));
}

double get_meta(const NamedTensors& t, const std::string& key) {
  const Mat& m = find_tensor(t, "meta/" + key);
  require(m.rows() == 1 && m.cols() == 1, ErrorKind::kSchema, "meta/" + key + " must be 1x1");
  return m(0, 0);
}

std::size_t get_count(const NamedTensors& t, const std::string& key) {
  const double v = get_meta(t, key);
  require(v >= 0.0 && v == static_cast<double>(static_cast<std::size_t>(v)), ErrorKind::kSchema,
          "meta/" + key + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

// Copies tensors into a freshly initialized model of the right shape.
template <typename Model>
void load_params(Model& model, const NamedTensors& t) {
  const auto names = model.named_params();
  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& src = find_tensor(t, names[i].first);
    require(src.rows() == params[i]->rows() && src.cols() == params[i]->cols(),
            ErrorKind::kDimension, "tensor " + names[i].first + " has the wrong shape");
    *params[i] = src;
  }
}

template <typename Model>
void save_params(const Model& model, NamedTensors& t) {
  for (const auto& [name, m] : model.named_params()) t.emplace_back(name, *m);
}

}  // namespace

NamedTensors to_tensors(const SeqAeModel& model) {
  const auto& c = model.config;
  NamedTensors t;
  put_meta(t, "kind", 1);
  put_meta(t, "variant", static_cast<double>(c.variant));
  put_meta(t, "feat_dim", static_cast<double>(c.feat_dim));
  put_meta(t, "hidden", static_cast<double>(c.hidden));
  put_meta(t, "layers", static_cast<double>(c.layers));
  put_meta(t, "unroll", static_cast<double>(c.unroll));
  put_meta(t, "dropout", c.dropout);
  put_meta(t, "bias", c.bias ? 1 : 0);
  put_meta(t, "normalize_loss", c.normalize_loss ? 1 : 0);
  put_meta(t, "reverse_present", c.reverse_present ? 1 : 0);
  save_params(model, t);
  return t;
}

SeqAeModel seq_ae_from_tensors(const NamedTensors& t) {
  require(get_meta(t, "kind") == 1, ErrorKind::kSchema, "checkpoint is not a sequence model");
  SeqAeConfig c;
  const std::size_t variant = get_count(t, "variant");
  require(variant <= 2, ErrorKind::kSchema, "meta/variant out of range");
  c.variant = static_cast<Variant>(variant);
  c.feat_dim = get_count(t, "feat_dim");
  c.hidden = get_count(t, "hidden");
  c.layers = get_count(t, "layers");
  c.unroll = get_count(t, "unroll");
  c.dropout = get_meta(t, "dropout");
  c.bias = get_meta(t, "bias") != 0;
  c.normalize_loss = get_meta(t, "normalize_loss") != 0;
  c.reverse_present = get_meta(t, "reverse_present") != 0;
  Rng rng(0);
  SeqAeModel m = SeqAeModel::init(c, rng);
  load_params(m, t);
  return m;
}

NamedTensors to_tensors(const RankModel& model) {
  const auto& c = model.config;
  NamedTensors t;
  put_meta(t, "kind", 2);
  put_meta(t, "visual_dim", static_cast<double>(c.visual_dim));
  put_meta(t, "word_dim", static_cast<double>(c.word_dim));
  put_meta(t, "sent_dim", static_cast<double>(c.sent_dim));
  put_meta(t, "word_space", static_cast<double>(c.word_space));
  put_meta(t, "sent_space", static_cast<double>(c.sent_space));
  put_meta(t, "alpha", c.alpha);
  put_meta(t, "beta", c.beta);
  put_meta(t, "lambda", c.lambda);
  save_params(model, t);
  return t;
}

RankModel rank_model_from_tensors(const NamedTensors& t) {
  require(get_meta(t, "kind") == 2, ErrorKind::kSchema, "checkpoint is not a ranking model");
  RankConfig c;
  c.visual_dim = get_count(t, "visual_dim");
  c.word_dim = get_count(t, "word_dim");
  c.sent_dim = get_count(t, "sent_dim");
  c.word_space = get_count(t, "word_space");
  c.sent_space = get_count(t, "sent_space");
  c.alpha = get_meta(t, "alpha");
  c.beta = get_meta(t, "beta");
  c.lambda = get_meta(t, "lambda");
  Rng rng(0);
  RankModel m = RankModel::init(c, rng);
  load_params(m, t);
  return m;
}

EmbeddingTable visual_table(const std::vector<FeatureSequence>& clips, const SeqAeModel* model) {
  EmbeddingTable table;
  for (const auto& c : clips) {
    table.add(c.clip_id, model != nullptr ? represent(*model, c.frames) : mean_pool(c.frames));
  }
  return table;
}

std::vector<Question> questions_for(const std::vector<Question>& questions,
                                    const std::vector<std::string>& clip_ids) {
  const std::set<std::string> keep(clip_ids.begin(), clip_ids.end());
  std::vector<Question> out;
  for (const auto& q : questions) {
    if (keep.contains(q.clip_id)) out.push_back(q);
  }
  return out;
}

std::vector<RankItem> assemble_items(const std::vector<Question>& questions,
                                     const EmbeddingTable& visual, const EmbeddingTable& words,
                                     const EmbeddingTable& sentences) {
  std::vector<RankItem> items;
  items.reserve(questions.size());
  for (const auto& q : questions) {
    RankItem item;
    item.id = q.id;
    const Vec* v = visual.find(q.clip_id);
    require(v != nullptr, ErrorKind::kSchema, "no visual vector for clip '" + q.clip_id + "'");
    item.visual = *v;
    const auto filled = filled_sentences(q);
    for (std::size_t j = 0; j < q.candidates.size(); ++j) {
      const Vec* s = sentences.find(filled[j]);
      require(s != nullptr, ErrorKind::kSchema, "no sentence vector for '" + filled[j] + "'");
      item.candidates.push_back({phrase_embed(q.candidates[j], words), *s, q.candidates[j]});
    }
    item.correct = q.correct_idx;
    item.task = q.task;
    item.difficulty = q.difficulty;
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace vqa

// SPDX-License-Identifier: Apache-2.0
// Glue between the file formats and the models: checkpoints, visual vector
// tables and question-to-vector resolution.
#pragma once

#include <string>
#include <vector>

#include "vqa/dual_rank.hpp"
#include "vqa/io.hpp"
#include "vqa/seq_autoencoder.hpp"

namespace vqa {

NamedTensors to_tensors(const SeqAeModel& model);
/// kSchema on missing tensors or metadata, kDimension on inconsistent shapes.
SeqAeModel seq_ae_from_tensors(const NamedTensors& t);

NamedTensors to_tensors(const RankModel& model);
RankModel rank_model_from_tensors(const NamedTensors& t);

/// Visual vector per clip: the encoder representation, or the mean frame
/// when `model` is null.
EmbeddingTable visual_table(const std::vector<FeatureSequence>& clips, const SeqAeModel* model);

/// Questions whose clip is in `clip_ids`, in input order.
std::vector<Question> questions_for(const std::vector<Question>& questions,
                                    const std::vector<std::string>& clip_ids);

/// Resolves every question to vectors: the clip's visual vector, the mean
/// word vector of each candidate and the sentence vector of each filled-in
/// description. kSchema if a clip or sentence is missing from its table.
std::vector<RankItem> assemble_items(const std::vector<Question>& questions,
                                     const EmbeddingTable& visual, const EmbeddingTable& words,
                                     const EmbeddingTable& sentences);

}  // namespace vqa

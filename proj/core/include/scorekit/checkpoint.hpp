#pragma once

#include <string>

#include "scorekit/dequant.hpp"
#include "scorekit/score_model.hpp"

namespace scorekit {

// Binary checkpoints: a small JSON header describing the layout followed by
// the raw little-endian doubles. Loading reproduces the saved parameters
// bit for bit. Unreadable files and bad magic raise IoError; a checkpoint
// of the wrong kind raises ConfigError.

void save_score_model(const std::string& path, const ScoreModel& model);
ScoreModel load_score_model(const std::string& path);

void save_dequant_flow(const std::string& path, const DequantFlow& flow);
DequantFlow load_dequant_flow(const std::string& path);

}  // namespace scorekit

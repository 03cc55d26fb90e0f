#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gibbsopt/structpred.hpp"

namespace gibbsopt {

/// One JSON object per line: {"features": [...], "label": [...]}. Blank lines
/// are skipped. Throws std::invalid_argument with the offending line number.
std::vector<LabeledExample> dataset_from_jsonl(std::string_view text);
std::string dataset_to_jsonl(const std::vector<LabeledExample>& data);

/// {"ell", "beta", "theta1", "theta2", "theta3"}.
IsingLabelModel model_from_json(std::string_view text);
std::string model_to_json(const IsingLabelModel& model);

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path);
IsingLabelModel load_model(const std::filesystem::path& path);

}  // namespace gibbsopt

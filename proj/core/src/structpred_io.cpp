#include "gibbsopt/structpred_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gibbsopt {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Vector to_vector(const json& arr) {
  if (!arr.is_array()) throw std::invalid_argument("expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t k = 0; k < arr.size(); ++k) v(static_cast<Eigen::Index>(k)) = arr[k].get<double>();
  return v;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::vector<LabeledExample> dataset_from_jsonl(std::string_view text) {
  std::vector<LabeledExample> data;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json doc = json::parse(line);
      LabeledExample ex;
      ex.features = to_vector(doc.at("features"));
      ex.label = doc.at("label").get<Label>();
      check_label(ex.label);
      if (ex.label.size() != static_cast<std::size_t>(ex.features.size())) {
        throw std::invalid_argument("features and label differ in length");
      }
      if (!data.empty() && ex.label.size() != data.front().label.size()) {
        throw std::invalid_argument("label length differs from earlier lines");
      }
      data.push_back(std::move(ex));
    } catch (const std::exception& e) {
      throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

std::string dataset_to_jsonl(const std::vector<LabeledExample>& data) {
  std::string out;
  for (const auto& ex : data) {
    json doc;
    doc["features"] = to_std(ex.features);
    doc["label"] = ex.label;
    out += doc.dump();
    out += '\n';
  }
  return out;
}

IsingLabelModel model_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    IsingLabelModel model;
    model.ell = doc.at("ell").get<std::size_t>();
    model.beta = doc.at("beta").get<double>();
    model.theta1 = to_vector(doc.at("theta1"));
    model.theta2 = to_vector(doc.at("theta2"));
    model.theta3 = to_vector(doc.at("theta3"));
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model JSON: ") + e.what());
  }
}

std::string model_to_json(const IsingLabelModel& model) {
  json doc;
  doc["ell"] = model.ell;
  doc["beta"] = model.beta;
  doc["theta1"] = to_std(model.theta1);
  doc["theta2"] = to_std(model.theta2);
  doc["theta3"] = to_std(model.theta3);
  return doc.dump();
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path) {
  return dataset_from_jsonl(read_file(path));
}

IsingLabelModel load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

}  // namespace gibbsopt

#include "gibbsopt/problem_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gibbsopt {

using nlohmann::json;

std::string problem_to_json(const MinMaxProblem& problem) {
  json doc;
  doc["n"] = problem.n();
  doc["D"] = problem.dim();
  doc["label_count"] = problem.label_count();
  doc["lambda"] = problem.lambda();
  json a = json::array();
  json b = json::array();
  json b_prime = json::array();
  for (std::size_t i = 0; i < problem.n(); ++i) {
    json a_row = json::array();
    json b_row = json::array();
    for (std::size_t y = 0; y < problem.label_count(); ++y) {
      const auto slope = problem.slope(i, y);
      a_row.push_back(std::vector<double>(slope.data(), slope.data() + slope.size()));
      b_row.push_back(problem.offset(i, y));
    }
    a.push_back(std::move(a_row));
    b.push_back(std::move(b_row));
    const Vector shift = problem.shift(i);
    b_prime.push_back(std::vector<double>(shift.data(), shift.data() + shift.size()));
  }
  doc["a"] = std::move(a);
  doc["b"] = std::move(b);
  doc["b_prime"] = std::move(b_prime);
  return doc.dump();
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("problem JSON: " + what);
}

}  // namespace

MinMaxProblem problem_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("problem JSON: ") + e.what());
  }
  require(doc.is_object(), "top level must be an object");
  for (const char* key : {"n", "D", "label_count", "lambda", "a", "b", "b_prime"}) {
    require(doc.contains(key), std::string("missing field '") + key + "'");
  }
  try {
    const auto n = doc.at("n").get<std::size_t>();
    const auto dim = doc.at("D").get<std::size_t>();
    const auto labels = doc.at("label_count").get<std::size_t>();
    MinMaxProblem problem(n, dim, labels, doc.at("lambda").get<double>());
    const json& a = doc.at("a");
    const json& b = doc.at("b");
    const json& b_prime = doc.at("b_prime");
    require(a.is_array() && a.size() == n, "a must have n rows");
    require(b.is_array() && b.size() == n, "b must have n rows");
    require(b_prime.is_array() && b_prime.size() == n, "b_prime must have n rows");
    for (std::size_t i = 0; i < n; ++i) {
      require(a[i].is_array() && a[i].size() == labels, "a[i] must have |Y| entries");
      require(b[i].is_array() && b[i].size() == labels, "b[i] must have |Y| entries");
      require(b_prime[i].is_array() && b_prime[i].size() == dim, "b_prime[i] must have D entries");
      for (std::size_t y = 0; y < labels; ++y) {
        require(a[i][y].is_array() && a[i][y].size() == dim, "a[i][y] must have D entries");
        for (std::size_t j = 0; j < dim; ++j) problem.slope(i, y)(static_cast<Eigen::Index>(j)) = a[i][y][j].get<double>();
        problem.offset(i, y) = b[i][y].get<double>();
      }
      for (std::size_t j = 0; j < dim; ++j) problem.shift(i)(static_cast<Eigen::Index>(j)) = b_prime[i][j].get<double>();
    }
    return problem;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("problem JSON: ") + e.what());
  }
}

void save_problem(const std::filesystem::path& path, const MinMaxProblem& problem) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << problem_to_json(problem) << '\n';
}

MinMaxProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open problem file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return problem_from_json(buffer.str());
}

}  // namespace gibbsopt

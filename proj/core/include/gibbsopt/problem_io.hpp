#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gibbsopt/objective.hpp"

namespace gibbsopt {

/// JSON document {n, D, label_count, lambda, a, b, b_prime} with
/// a: n x |Y| x D, b: n x |Y|, b_prime: n x D. Doubles are written in
/// shortest round-trip form, so save/load is lossless.
std::string problem_to_json(const MinMaxProblem& problem);

/// Throws std::invalid_argument on malformed or inconsistent documents.
MinMaxProblem problem_from_json(std::string_view text);

void save_problem(const std::filesystem::path& path, const MinMaxProblem& problem);
MinMaxProblem load_problem(const std::filesystem::path& path);

}  // namespace gibbsopt

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace ctsql {

// Derives a named sub-seed from the run seed. Stages keyed by different names
// stay independent: changing one name's stream never perturbs another.
uint64_t sub_seed(uint64_t master, std::string_view name);

// splitmix64; used wherever we need a cheap seeded stream.
uint64_t mix64(uint64_t x);

std::string lowercase(std::string_view s);
std::string trim(std::string_view s);

// Lowercases and splits on whitespace and punctuation. Quoted strings
// ('...' or "...") and numeric literals survive as single tokens.
std::vector<std::string> tokenize(std::string_view text);

std::string join(const std::vector<std::string>& tokens, std::string_view sep);

// Runs fn(i) for i in [0, n). Chunked across `threads` workers when
// threads > 1; the caller is responsible for making iterations independent.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace ctsql

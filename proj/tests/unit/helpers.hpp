#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "contro/corpus.hpp"

namespace contro::testing {

/// Post "p" at time t0 with comments c1..cn; parents[i] is the parent of
/// comment i+1 (0 = post) and offsets[i] its delay in seconds.
inline CommentTree tree_from_parents(const std::vector<int>& parents, const std::vector<std::int64_t>& offsets,
                                     Timestamp t0 = 1'400'000'000) {
  Post p;
  p.id = "p";
  p.created = t0;
  std::vector<Comment> cs;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    Comment c;
    c.id = "c" + std::to_string(i + 1);
    c.post_id = "p";
    c.parent_id = parents[i] == 0 ? "p" : "c" + std::to_string(parents[i]);
    c.created = t0 + offsets[i];
    c.body = "comment " + std::to_string(i + 1);
    cs.push_back(c);
  }
  auto built = build_trees({p}, cs);
  return built.trees.front();
}

/// Random recursive tree: each comment attaches to a uniform earlier node.
inline CommentTree random_tree(std::mt19937_64& rng, std::size_t n_comments) {
  std::vector<int> parents;
  std::vector<std::int64_t> offsets;
  std::uniform_int_distribution<std::int64_t> gap(0, 600);
  std::vector<std::int64_t> time{0};
  for (std::size_t i = 1; i <= n_comments; ++i) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(i) - 1);
    int parent = pick(rng);
    parents.push_back(parent);
    time.push_back(time[static_cast<std::size_t>(parent)] + gap(rng));
    offsets.push_back(time.back());
  }
  return tree_from_parents(parents, offsets);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::path(CONTRO_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace contro::testing

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace contro {

using Timestamp = std::int64_t;  // unix seconds

struct Post {
  std::string id;
  std::string subreddit;
  std::optional<std::string> author;
  Timestamp created = 0;
  std::string title;
  std::string body;
  std::int64_t num_comments_eventual = 0;
  std::vector<double> pupv_samples;
  std::vector<std::int64_t> score_samples;
  bool body_deleted = false;
};

struct Comment {
  std::string id;
  std::string post_id;
  std::string parent_id;  // post id or comment id, type prefix stripped
  std::optional<std::string> author;
  Timestamp created = 0;
  std::string body;
  bool body_deleted = false;
};

/// "[deleted]" and "[removed]" mark text that text features must ignore.
bool is_deletion_sentinel(std::string_view body);

enum class DumpKind { posts, comments };

/// Throws std::invalid_argument for anything other than "posts"/"comments".
DumpKind parse_dump_kind(std::string_view kind);

struct SkipEntry {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct ParseLog {
  std::size_t lines = 0;
  std::size_t records = 0;
  std::vector<SkipEntry> skips;
  std::size_t skipped() const { return skips.size(); }
};

struct Dump {
  std::vector<Post> posts;
  std::vector<Comment> comments;
  ParseLog log;
};

/// One JSON object per line, pushshift field names. Blank lines are ignored;
/// malformed lines and records lacking required fields are skipped and
/// logged. Duplicate ids keep the first occurrence.
Dump parse_dump(std::istream& in, DumpKind kind);

/// Throws DataError when the file cannot be opened.
Dump parse_dump_file(const std::filesystem::path& path, DumpKind kind);

/// One node per tree vertex. Node 0 is the post; nodes are stored in
/// breadth-first order so a parent always precedes its children.
struct TreeNode {
  std::int32_t parent = -1;
  std::int32_t depth = 0;
  std::int32_t comment = -1;  // index into the tree's comment pool; -1 for the post
  Timestamp created = 0;
  std::vector<std::int32_t> children;
};

class CommentTree {
 public:
  CommentTree(std::shared_ptr<const Post> post,
              std::shared_ptr<const std::vector<Comment>> pool,
              std::vector<TreeNode> nodes);

  const Post& post() const { return *post_; }
  std::span<const TreeNode> nodes() const { return nodes_; }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t n_comments() const { return nodes_.size() - 1; }

  /// Comment backing node i (i > 0).
  const Comment& comment(std::size_t i) const { return (*pool_)[static_cast<std::size_t>(nodes_[i].comment)]; }

  /// Pool shared by every window of this tree.
  const std::shared_ptr<const std::vector<Comment>>& pool() const { return pool_; }
  const std::shared_ptr<const Post>& post_ptr() const { return post_; }

 private:
  std::shared_ptr<const Post> post_;
  std::shared_ptr<const std::vector<Comment>> pool_;
  std::vector<TreeNode> nodes_;
};

struct OrphanEntry {
  std::string comment_id;
  std::string reason;  // "missing_parent", "cycle", "duplicate_id", "self_parent"
};

struct TreeBuild {
  std::vector<CommentTree> trees;  // one per post, in input order
  std::vector<OrphanEntry> orphans;
};

/// Attaches every comment whose parent chain reaches a known post. Orphans
/// and cycle members are dropped and logged. Siblings are ordered by
/// (created, id).
TreeBuild build_trees(std::vector<Post> posts, std::vector<Comment> comments);

/// Keeps comments with created <= post.created + 60*minutes whose ancestors
/// are all kept. Node order and the comment pool are preserved.
CommentTree prune_to_window(const CommentTree& tree, double minutes);

/// Ids of all comments reachable in the given trees, tree by tree in node order.
std::vector<std::string> flatten(std::span<const CommentTree> trees);

nlohmann::json ingest_report(const ParseLog& posts, const ParseLog& comments,
                             std::span<const OrphanEntry> orphans);

}  // namespace contro

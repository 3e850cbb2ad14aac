#include "contro/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "contro/error.hpp"

namespace contro {

using nlohmann::json;

bool is_deletion_sentinel(std::string_view body) {
  return body == "[deleted]" || body == "[removed]";
}

DumpKind parse_dump_kind(std::string_view kind) {
  if (kind == "posts") return DumpKind::posts;
  if (kind == "comments") return DumpKind::comments;
  throw std::invalid_argument("unknown dump kind: " + std::string(kind));
}

namespace {

std::string strip_type_prefix(std::string s) {
  // reddit fullnames: t1_ (comment), t3_ (link)
  if (s.size() > 3 && s[0] == 't' && s[2] == '_' && (s[1] == '1' || s[1] == '3')) return s.substr(3);
  return s;
}

std::optional<Timestamp> read_timestamp(const json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (!std::isfinite(d)) return std::nullopt;
    return static_cast<Timestamp>(std::floor(d));
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    Timestamp t = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
    if (ec == std::errc() && p == s.data() + s.size()) return t;
  }
  return std::nullopt;
}

std::optional<std::string> read_author(const json& obj) {
  auto it = obj.find("author");
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  auto a = it->get<std::string>();
  if (a.empty() || is_deletion_sentinel(a)) return std::nullopt;
  return a;
}

std::string read_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

// Scalars are single observations; arrays are repeated observations.
template <typename T>
std::optional<std::vector<T>> read_samples(const json& v) {
  std::vector<T> out;
  auto push = [&](const json& x) {
    if (!x.is_number()) return false;
    out.push_back(x.get<T>());
    return true;
  };
  if (v.is_array()) {
    for (const auto& x : v)
      if (!push(x)) return std::nullopt;
  } else if (!push(v)) {
    return std::nullopt;
  }
  return out;
}

std::optional<std::string> parse_post(const json& obj, Post& p) {
  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) return "missing id";
  p.id = strip_type_prefix(id->get<std::string>());
  auto created = obj.find("created_utc");
  if (created == obj.end()) return "missing created_utc";
  auto ts = read_timestamp(*created);
  if (!ts || *ts <= 0) return "invalid created_utc";
  p.created = *ts;
  p.subreddit = read_string(obj, "subreddit");
  p.author = read_author(obj);
  p.title = read_string(obj, "title");
  p.body = read_string(obj, "selftext");
  p.body_deleted = is_deletion_sentinel(p.body);
  if (auto it = obj.find("num_comments"); it != obj.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) return "invalid num_comments";
    p.num_comments_eventual = it->get<std::int64_t>();
  }
  if (auto it = obj.find("upvote_ratio"); it != obj.end() && !it->is_null()) {
    auto s = read_samples<double>(*it);
    if (!s) return "invalid upvote_ratio";
    for (double x : *s)
      if (!(x >= 0.0 && x <= 1.0)) return "upvote_ratio outside [0,1]";
    p.pupv_samples = std::move(*s);
  }
  if (auto it = obj.find("score"); it != obj.end() && !it->is_null()) {
    auto s = read_samples<std::int64_t>(*it);
    if (!s) return "invalid score";
    p.score_samples = std::move(*s);
  }
  return std::nullopt;
}

std::optional<std::string> parse_comment(const json& obj, Comment& c) {
  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) return "missing id";
  c.id = strip_type_prefix(id->get<std::string>());
  auto created = obj.find("created_utc");
  if (created == obj.end()) return "missing created_utc";
  auto ts = read_timestamp(*created);
  if (!ts || *ts <= 0) return "invalid created_utc";
  c.created = *ts;
  c.post_id = strip_type_prefix(read_string(obj, "link_id"));
  c.parent_id = strip_type_prefix(read_string(obj, "parent_id"));
  if (c.parent_id.empty()) return "missing parent_id";
  if (c.post_id.empty()) return "missing link_id";
  if (c.parent_id == c.id) return "comment is its own parent";
  c.author = read_author(obj);
  c.body = read_string(obj, "body");
  c.body_deleted = is_deletion_sentinel(c.body);
  return std::nullopt;
}

}  // namespace

Dump parse_dump(std::istream& in, DumpKind kind) {
  Dump out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    ++out.log.lines;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) {
      out.log.skips.push_back({lineno, "malformed json"});
      continue;
    }
    std::optional<std::string> err;
    std::string id;
    if (kind == DumpKind::posts) {
      Post p;
      err = parse_post(obj, p);
      if (!err) {
        id = p.id;
        if (seen.insert(id).second) out.posts.push_back(std::move(p));
        else err = "duplicate id";
      }
    } else {
      Comment c;
      err = parse_comment(obj, c);
      if (!err) {
        id = c.id;
        if (seen.insert(id).second) out.comments.push_back(std::move(c));
        else err = "duplicate id";
      }
    }
    if (err) out.log.skips.push_back({lineno, *err});
    else ++out.log.records;
  }
  if (in.bad()) throw DataError("read error in dump stream");
  return out;
}

Dump parse_dump_file(const std::filesystem::path& path, DumpKind kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_dump(in, kind);
}

CommentTree::CommentTree(std::shared_ptr<const Post> post,
                         std::shared_ptr<const std::vector<Comment>> pool,
                         std::vector<TreeNode> nodes)
    : post_(std::move(post)), pool_(std::move(pool)), nodes_(std::move(nodes)) {
  if (!post_ || !pool_ || nodes_.empty()) throw std::invalid_argument("CommentTree needs a post node");
}

TreeBuild build_trees(std::vector<Post> posts, std::vector<Comment> comments) {
  TreeBuild out;

  std::unordered_map<std::string, std::size_t> post_index;
  for (std::size_t i = 0; i < posts.size(); ++i) post_index.emplace(posts[i].id, i);

  std::unordered_map<std::string, std::size_t> comment_index;
  std::vector<bool> usable(comments.size(), true);
  for (std::size_t i = 0; i < comments.size(); ++i) {
    if (comments[i].parent_id == comments[i].id) {
      usable[i] = false;
      out.orphans.push_back({comments[i].id, "self_parent"});
      continue;
    }
    if (!comment_index.emplace(comments[i].id, i).second) {
      usable[i] = false;
      out.orphans.push_back({comments[i].id, "duplicate_id"});
    }
  }

  // Resolve each comment's root post by walking parent links.
  constexpr std::int64_t kUnknown = -1, kVisiting = -2, kOrphan = -3, kCycle = -4;
  std::vector<std::int64_t> root(comments.size(), kUnknown);
  for (std::size_t i = 0; i < comments.size(); ++i) {
    if (!usable[i]) root[i] = kOrphan;
  }
  std::vector<std::size_t> path;
  for (std::size_t start = 0; start < comments.size(); ++start) {
    if (root[start] != kUnknown) continue;
    path.clear();
    std::size_t cur = start;
    std::int64_t resolved = kUnknown;
    while (true) {
      if (root[cur] == kVisiting) {
        resolved = kCycle;
        break;
      }
      if (root[cur] != kUnknown) {
        resolved = root[cur] >= 0 ? root[cur] : (root[cur] == kCycle ? kCycle : kOrphan);
        break;
      }
      root[cur] = kVisiting;
      path.push_back(cur);
      const auto& pid = comments[cur].parent_id;
      if (auto p = post_index.find(pid); p != post_index.end()) {
        resolved = static_cast<std::int64_t>(p->second);
        break;
      }
      auto c = comment_index.find(pid);
      if (c == comment_index.end() || !usable[c->second]) {
        resolved = kOrphan;
        break;
      }
      cur = c->second;
    }
    for (auto k : path) root[k] = resolved;
  }
  for (std::size_t i = 0; i < comments.size(); ++i) {
    if (!usable[i]) continue;
    if (root[i] == kOrphan) out.orphans.push_back({comments[i].id, "missing_parent"});
    else if (root[i] == kCycle) out.orphans.push_back({comments[i].id, "cycle"});
  }

  std::vector<std::vector<std::size_t>> members(posts.size());
  for (std::size_t i = 0; i < comments.size(); ++i)
    if (root[i] >= 0) members[static_cast<std::size_t>(root[i])].push_back(i);

  out.trees.reserve(posts.size());
  for (std::size_t pi = 0; pi < posts.size(); ++pi) {
    auto pool = std::make_shared<std::vector<Comment>>();
    pool->reserve(members[pi].size());
    for (auto ci : members[pi]) pool->push_back(std::move(comments[ci]));
    std::sort(pool->begin(), pool->end(), [](const Comment& a, const Comment& b) {
      return a.created != b.created ? a.created < b.created : a.id < b.id;
    });

    std::unordered_map<std::string_view, std::size_t> local;
    for (std::size_t k = 0; k < pool->size(); ++k) local.emplace((*pool)[k].id, k);
    std::vector<std::vector<std::size_t>> kids(pool->size() + 1);  // slot 0 = post
    for (std::size_t k = 0; k < pool->size(); ++k) {
      auto it = local.find((*pool)[k].parent_id);
      kids[it == local.end() ? 0 : it->second + 1].push_back(k);
    }

    std::vector<TreeNode> nodes;
    nodes.reserve(pool->size() + 1);
    nodes.push_back(TreeNode{-1, 0, -1, posts[pi].created, {}});
    std::vector<std::size_t> slot_of_node{0};
    for (std::size_t head = 0; head < nodes.size(); ++head) {
      for (auto k : kids[slot_of_node[head]]) {
        auto idx = static_cast<std::int32_t>(nodes.size());
        nodes[head].children.push_back(idx);
        nodes.push_back(TreeNode{static_cast<std::int32_t>(head), nodes[head].depth + 1,
                                 static_cast<std::int32_t>(k), (*pool)[k].created, {}});
        slot_of_node.push_back(k + 1);
      }
    }
    out.trees.emplace_back(std::make_shared<const Post>(std::move(posts[pi])), std::move(pool), std::move(nodes));
  }
  return out;
}

CommentTree prune_to_window(const CommentTree& tree, double minutes) {
  if (!(minutes >= 0.0)) throw std::invalid_argument("window must be >= 0 minutes");
  const double cutoff = static_cast<double>(tree.post().created) + 60.0 * minutes;
  auto src = tree.nodes();
  std::vector<std::int32_t> remap(src.size(), -1);
  std::vector<TreeNode> kept;
  kept.push_back(TreeNode{-1, 0, -1, src[0].created, {}});
  remap[0] = 0;
  for (std::size_t i = 1; i < src.size(); ++i) {
    const auto& n = src[i];
    auto parent = remap[static_cast<std::size_t>(n.parent)];
    if (parent < 0 || static_cast<double>(n.created) > cutoff) continue;
    auto idx = static_cast<std::int32_t>(kept.size());
    remap[i] = idx;
    kept[static_cast<std::size_t>(parent)].children.push_back(idx);
    kept.push_back(TreeNode{parent, n.depth, n.comment, n.created, {}});
  }
  return CommentTree(tree.post_ptr(), tree.pool(), std::move(kept));
}

std::vector<std::string> flatten(std::span<const CommentTree> trees) {
  std::vector<std::string> ids;
  for (const auto& t : trees)
    for (std::size_t i = 1; i < t.size(); ++i) ids.push_back(t.comment(i).id);
  return ids;
}

json ingest_report(const ParseLog& posts, const ParseLog& comments, std::span<const OrphanEntry> orphans) {
  auto log_json = [](const ParseLog& l) {
    json skips = json::array();
    for (const auto& s : l.skips) skips.push_back({{"line", s.line}, {"reason", s.reason}});
    return json{{"lines", l.lines}, {"records", l.records}, {"skipped", l.skipped()}, {"skips", skips}};
  };
  json orph = json::array();
  for (const auto& o : orphans) orph.push_back({{"comment_id", o.comment_id}, {"reason", o.reason}});
  return json{{"posts", log_json(posts)}, {"comments", log_json(comments)},
              {"orphans", {{"count", orphans.size()}, {"entries", orph}}}};
}

}  // namespace contro

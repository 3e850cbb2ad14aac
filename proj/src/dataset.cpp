#include "contro/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "contro/error.hpp"
#include "contro/text.hpp"

namespace contro {

std::vector<std::string> Dataset::row_ids() const {
  std::vector<std::string> ids;
  ids.reserve(trees.size());
  for (const auto& t : trees) ids.push_back(t.post().id);
  return ids;
}

Dataset make_dataset(std::string community, std::span<const CommentTree> trees, std::span<const LabelRecord> labels,
                     Resources resources) {
  std::unordered_map<std::string, Label> by_id;
  for (const auto& r : labels) by_id.emplace(r.post_id, r.label);
  Dataset ds;
  ds.community = std::move(community);
  ds.resources = std::move(resources);
  for (const auto& t : trees) {
    auto it = by_id.find(t.post().id);
    if (it == by_id.end() || it->second == Label::discarded) continue;
    ds.trees.push_back(t);
    ds.labels.push_back(it->second == Label::controversial ? 1 : 0);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Feature specs

namespace {

constexpr std::array<std::pair<Family, std::string_view>, 9> kFamilyNames = {{
    {Family::TEXT, "TEXT"},
    {Family::TIME, "TIME"},
    {Family::AUTHOR, "AUTHOR"},
    {Family::HAND, "HAND"},
    {Family::TFIDF, "TFIDF"},
    {Family::C_RATE, "C-RATE"},
    {Family::C_TREE, "C-TREE"},
    {Family::C_TEXT, "C-TEXT"},
    {Family::CONST, "CONST"},
}};

}  // namespace

std::string_view to_string(Family f) {
  for (const auto& [fam, name] : kFamilyNames)
    if (fam == f) return name;
  return "?";
}

FeatureSpec FeatureSpec::parse(std::string_view s) {
  FeatureSpec spec;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find('+', start);
    if (end == std::string_view::npos) end = s.size();
    const auto part = s.substr(start, end - start);
    bool found = false;
    for (const auto& [fam, name] : kFamilyNames) {
      if (name != part) continue;
      if (!spec.families.insert(fam).second) throw std::invalid_argument("feature family repeated: " + std::string(part));
      found = true;
    }
    if (!found) throw std::invalid_argument("unknown feature family: '" + std::string(part) + "'");
    start = end + 1;
  }
  return spec;
}

std::string FeatureSpec::name() const {
  std::string out;
  for (auto f : families) {
    if (!out.empty()) out += '+';
    out += to_string(f);
  }
  return out;
}

bool FeatureSpec::uses_comments() const { return has(Family::C_RATE) || has(Family::C_TREE) || has(Family::C_TEXT); }

// ---------------------------------------------------------------------------
// Raw extraction

RawFeatures extract_raw(const Dataset& ds, const FeatureSpec& spec, std::optional<double> window, Exec exec) {
  const auto& res = ds.resources;
  if (spec.uses_comments() && !window) throw std::invalid_argument(spec.name() + " needs an observation window");
  if (spec.has(Family::TEXT) && !res.embeddings) throw std::invalid_argument("TEXT features need an embedding table");
  if (spec.has(Family::C_TEXT) && !res.comment_vectors && !res.embeddings)
    throw std::invalid_argument("C-TEXT features need comment vectors or an embedding table");

  RawFeatures raw;
  raw.window = window;
  const std::size_t n = ds.size();
  raw.row_ids = ds.row_ids();
  raw.tokens.resize(n);
  raw.text_mean.resize(n);
  raw.created.resize(n);
  raw.authors.resize(n);
  raw.hand.resize(n);
  raw.ctext.resize(n);
  if (res.embeddings) raw.text_dim = res.embeddings->dim();

  std::shared_ptr<const Lexicons> lex = res.lexicons;
  if (spec.has(Family::HAND)) {
    if (!lex) lex = std::make_shared<const Lexicons>(default_lexicons());
    raw.hand_names = hand_feature_names(*lex);
  }
  std::shared_ptr<const CommentVectorSource> cvec = res.comment_vectors;
  if (spec.has(Family::C_TEXT)) {
    if (!cvec) cvec = std::make_shared<TableCommentVectors>(res.embeddings, res.comment_max_tokens);
    raw.ctext_dim = cvec->dim();
  }

  const bool want_tokens = spec.has(Family::TEXT) || spec.has(Family::TFIDF);
  auto one = [&](std::size_t i) {
    const auto& post = ds.trees[i].post();
    raw.created[i] = post.created;
    raw.authors[i] = post.author;
    const std::string_view body = post.body_deleted ? std::string_view{} : std::string_view{post.body};
    if (want_tokens) {
      auto toks = text::tokenize(post.title);
      auto body_toks = text::tokenize(body);
      toks.insert(toks.end(), std::make_move_iterator(body_toks.begin()), std::make_move_iterator(body_toks.end()));
      raw.tokens[i] = std::move(toks);
      if (spec.has(Family::TEXT) && res.pooling == Pooling::mean)
        raw.text_mean[i] = embed_doc(raw.tokens[i], *res.embeddings, res.text_max_tokens);
    }
    if (spec.has(Family::HAND)) raw.hand[i] = hand_features(post.title, body, *lex).to_vector();
    if (spec.has(Family::C_TEXT)) raw.ctext[i] = ctext_features(prune_to_window(ds.trees[i], *window), *cvec);
  };

  // exceptions cannot leave an OpenMP region, so the first one is carried out
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        one(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(contro_extract_raw)
        if (!failure) failure = std::current_exception();
      }
    }
  } else {
    for (std::ptrdiff_t i = 0; i < count; ++i) one(static_cast<std::size_t>(i));
  }
  if (failure) std::rethrow_exception(failure);

  if (spec.has(Family::C_RATE) || spec.has(Family::C_TREE))
    raw.conv = extract_conv_features(ds.trees, *window, res.gini, exec);
  return raw;
}

// ---------------------------------------------------------------------------
// Fold featurizer

namespace {

std::string numbered(const char* prefix, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, k + 1);
  return buf;
}

std::optional<double> rate_value(const RateFeatures& r, std::size_t k) {
  switch (k) {
    case 0: return static_cast<double>(r.n_comments);
    case 1: return r.log_first_reply_gap;
    default: return r.mean_log_parent_child_gap;
  }
}

std::optional<double> tree_value(const TreeFeatures& t, std::size_t k) {
  const std::optional<double> TreeFeatures::*fields[] = {
      &TreeFeatures::max_depth_ratio, &TreeFeatures::prop_top_level,         &TreeFeatures::avg_depth,
      &TreeFeatures::avg_branching,   &TreeFeatures::prop_top_level_replied, &TreeFeatures::gini_top_level_replies,
      &TreeFeatures::wiener_index};
  return t.*fields[k];
}

}  // namespace

FoldFeaturizer FoldFeaturizer::fit(const RawFeatures& raw, std::span<const std::size_t> train_rows,
                                   const FeatureSpec& spec, const Resources& res) {
  FoldFeaturizer f;
  f.spec_ = spec;
  f.res_ = res;
  f.text_dim_ = raw.text_dim;
  f.ctext_dim_ = raw.ctext_dim;
  f.hand_count_ = raw.hand_names.size();
  for (auto r : train_rows)
    if (r >= raw.row_ids.size()) throw std::out_of_range("FoldFeaturizer::fit: row index out of range");

  auto& cols = f.columns_;
  for (auto fam : spec.families) {
    switch (fam) {
      case Family::TEXT: {
        std::vector<std::vector<std::string>> docs;
        for (auto r : train_rows) docs.push_back(raw.tokens[r]);
        if (res.pooling == Pooling::sif) f.sif_ = SifModel::fit(docs, *res.embeddings);
        std::vector<std::vector<double>> vecs;
        for (auto r : train_rows) {
          auto v = f.sif_ ? f.sif_->transform(raw.tokens[r], *res.embeddings) : raw.text_mean[r];
          if (v) vecs.push_back(std::move(*v));
        }
        if (vecs.size() >= 2) {
          Eigen::MatrixXd m(static_cast<Eigen::Index>(vecs.size()), static_cast<Eigen::Index>(f.text_dim_));
          for (std::size_t i = 0; i < vecs.size(); ++i)
            m.row(static_cast<Eigen::Index>(i)) =
                Eigen::Map<const Eigen::RowVectorXd>(vecs[i].data(), static_cast<Eigen::Index>(vecs[i].size()));
          const std::size_t d_out = std::min({res.pca_dim, f.text_dim_, vecs.size() - 1});
          f.pca_ = pca_fit(m, d_out);
          for (std::size_t k = 0; k < d_out; ++k) cols.push_back(numbered("text_pc", k));
        }
        break;
      }
      case Family::TIME: {
        std::vector<Timestamp> ts;
        for (auto r : train_rows) ts.push_back(raw.created[r]);
        f.time_ = TimeEncoder::fit(ts);
        for (auto& nm : f.time_->names()) cols.push_back(nm);
        break;
      }
      case Family::AUTHOR: {
        std::vector<std::optional<std::string>> authors;
        for (auto r : train_rows) authors.push_back(raw.authors[r]);
        f.author_ = AuthorEncoder::fit(authors);
        for (const auto& a : f.author_->authors()) cols.push_back("author_" + a);
        break;
      }
      case Family::HAND:
        cols.insert(cols.end(), raw.hand_names.begin(), raw.hand_names.end());
        break;
      case Family::TFIDF: {
        std::vector<std::vector<std::string>> docs;
        for (auto r : train_rows) docs.push_back(raw.tokens[r]);
        f.tfidf_ = TfidfModel::fit(docs);
        for (const auto& w : f.tfidf_->vocabulary()) cols.push_back("tfidf_" + w);
        break;
      }
      case Family::C_RATE:
        for (auto nm : kRateFeatureNames) cols.push_back("c_rate_" + std::string(nm));
        break;
      case Family::C_TREE:
        for (auto nm : kTreeFeatureNames) cols.push_back("c_tree_" + std::string(nm));
        break;
      case Family::C_TEXT:
        for (std::size_t k = 0; k < f.ctext_dim_; ++k) cols.push_back(numbered("c_text_", k));
        break;
      case Family::CONST:
        cols.push_back("const");
        break;
    }
  }
  return f;
}

FeatureMatrix FoldFeaturizer::transform(const RawFeatures& raw, std::span<const std::size_t> rows) const {
  if (spec_.has(Family::TEXT) && raw.text_dim != text_dim_)
    throw DataError("TEXT embedding dimension " + std::to_string(raw.text_dim) + " differs from fitted " +
                    std::to_string(text_dim_));
  if (spec_.has(Family::C_TEXT) && raw.ctext_dim != ctext_dim_)
    throw DataError("C-TEXT dimension " + std::to_string(raw.ctext_dim) + " differs from fitted " +
                    std::to_string(ctext_dim_));
  if (spec_.has(Family::HAND) && raw.hand_names.size() != hand_count_)
    throw DataError("HAND feature count differs from fitted featurizer");
  if ((spec_.has(Family::C_RATE) || spec_.has(Family::C_TREE)) && raw.conv.size() != raw.row_ids.size())
    throw std::invalid_argument("raw features lack comment data");

  std::vector<std::string> ids;
  for (auto r : rows) ids.push_back(raw.row_ids.at(r));
  FeatureMatrix m(std::move(ids), columns_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    std::size_t c = 0;
    for (auto fam : spec_.families) {
      switch (fam) {
        case Family::TEXT: {
          if (!pca_) break;
          auto v = sif_ ? sif_->transform(raw.tokens[r], *res_.embeddings) : raw.text_mean[r];
          const auto d_out = static_cast<std::size_t>(pca_->components.rows());
          if (v) {
            const Eigen::VectorXd z =
                pca_apply(*pca_, Eigen::Map<const Eigen::VectorXd>(v->data(), static_cast<Eigen::Index>(v->size())));
            for (std::size_t k = 0; k < d_out; ++k) m.set(i, c + k, z(static_cast<Eigen::Index>(k)));
          } else {
            for (std::size_t k = 0; k < d_out; ++k) m.set_missing(i, c + k);
          }
          c += d_out;
          break;
        }
        case Family::TIME: {
          const auto v = time_->transform(raw.created[r]);
          for (double x : v) m.set(i, c++, x);
          break;
        }
        case Family::AUTHOR: {
          const auto v = author_->transform(raw.authors[r]);
          for (double x : v) m.set(i, c++, x);
          break;
        }
        case Family::HAND:
          for (double x : raw.hand[r]) m.set(i, c++, x);
          break;
        case Family::TFIDF: {
          const auto v = tfidf_->transform(raw.tokens[r]);
          for (double x : v) m.set(i, c++, x);
          break;
        }
        case Family::C_RATE:
          for (std::size_t k = 0; k < kRateFeatureNames.size(); ++k) m.set(i, c++, rate_value(raw.conv[r].rate, k));
          break;
        case Family::C_TREE:
          for (std::size_t k = 0; k < kTreeFeatureNames.size(); ++k) m.set(i, c++, tree_value(raw.conv[r].tree, k));
          break;
        case Family::C_TEXT:
          if (raw.ctext[r]) {
            for (double x : *raw.ctext[r]) m.set(i, c++, x);
          } else {
            for (std::size_t k = 0; k < ctext_dim_; ++k) m.set_missing(i, c++);
          }
          break;
        case Family::CONST:
          m.set(i, c++, 1.0);
          break;
      }
    }
  }
  return m;
}

nlohmann::json FoldFeaturizer::state() const {
  nlohmann::json j;
  j["spec"] = spec_.name();
  j["columns"] = columns_;
  if (tfidf_) j["tfidf"] = {{"vocabulary", tfidf_->vocabulary()}, {"idf", tfidf_->idf()}, {"n_docs", tfidf_->n_docs()}};
  if (sif_) j["sif_component"] = sif_->common_component();
  if (pca_) {
    j["pca_mean"] = std::vector<double>(pca_->mean.data(), pca_->mean.data() + pca_->mean.size());
    j["pca_eigenvalues"] =
        std::vector<double>(pca_->eigenvalues.data(), pca_->eigenvalues.data() + pca_->eigenvalues.size());
    std::vector<double> comps(pca_->components.data(), pca_->components.data() + pca_->components.size());
    j["pca_components"] = comps;
  }
  if (time_) j["time_years"] = {time_->min_year(), time_->max_year()};
  if (author_) j["authors"] = author_->authors();
  return j;
}

}  // namespace contro

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "contro/error.hpp"
#include "contro/postfeat.hpp"
#include "contro/text.hpp"

namespace contro {

// ---------------------------------------------------------------------------
// TF-IDF

TfidfModel TfidfModel::fit(std::span<const std::vector<std::string>> docs, std::size_t min_count) {
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> stats;  // count, df
  for (const auto& doc : docs) {
    std::unordered_set<std::string_view> seen;
    for (const auto& t : doc) {
      auto& s = stats[t];
      ++s.first;
      if (seen.insert(t).second) ++s.second;
    }
  }
  TfidfModel m;
  m.fitted_ = true;
  m.n_docs_ = docs.size();
  for (const auto& [tok, s] : stats)
    if (s.first > min_count) m.vocab_.push_back(tok);
  std::sort(m.vocab_.begin(), m.vocab_.end());
  const auto n = static_cast<double>(m.n_docs_);
  for (std::size_t i = 0; i < m.vocab_.size(); ++i) {
    const auto df = stats.at(m.vocab_[i]).second;
    m.df_.push_back(df);
    m.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0);
    m.index_.emplace(m.vocab_[i], i);
  }
  return m;
}

std::vector<double> TfidfModel::transform(const std::vector<std::string>& tokens) const {
  if (!fitted_) throw std::logic_error("TfidfModel::transform called before fit");
  std::vector<double> v(vocab_.size(), 0.0);
  for (const auto& t : tokens)
    if (auto it = index_.find(t); it != index_.end()) v[it->second] += 1.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] *= idf_[i];
    norm += v[i] * v[i];
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingTable::EmbeddingTable(std::size_t dim, std::string source) : dim_(dim), source_(std::move(source)) {
  if (dim == 0) throw std::invalid_argument("EmbeddingTable: dimension must be positive");
}

void EmbeddingTable::add(const std::string& token, std::span<const double> vec) {
  if (vec.size() != dim_) throw std::invalid_argument("EmbeddingTable::add: dimension mismatch for " + token);
  if (index_.count(token)) throw std::invalid_argument("EmbeddingTable::add: duplicate token " + token);
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  data_.insert(data_.end(), vec.begin(), vec.end());
}

std::optional<std::span<const double>> EmbeddingTable::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return std::span<const double>(data_.data() + it->second * dim_, dim_);
}

namespace {

bool parse_double(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) parts.push_back(line.substr(i, j - i));
    i = j;
  }
  return parts;
}

}  // namespace

EmbeddingTable read_embeddings(std::istream& in, std::string source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ":1: missing header");
  auto header = split_ws(line);
  std::size_t count = 0, dim = 0;
  auto parse_size = [](std::string_view s, std::size_t& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
  };
  if (header.size() != 2 || !parse_size(header[0], count) || !parse_size(header[1], dim) || dim == 0)
    throw DataError(source + ":1: header must be '<count> <dim>'");
  EmbeddingTable table(dim, source);
  std::size_t lineno = 1;
  std::vector<double> vec(dim);
  while (std::getline(in, line)) {
    ++lineno;
    auto parts = split_ws(line);
    if (parts.empty()) continue;
    if (parts.size() != dim + 1)
      throw DataError(source + ":" + std::to_string(lineno) + ": expected token and " + std::to_string(dim) + " values");
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_double(parts[k + 1], vec[k]))
        throw DataError(source + ":" + std::to_string(lineno) + ": bad value '" + std::string(parts[k + 1]) + "'");
    }
    std::string tok(parts[0]);
    if (table.find(tok)) throw DataError(source + ":" + std::to_string(lineno) + ": duplicate token " + tok);
    table.add(tok, vec);
  }
  if (table.size() != count)
    throw DataError(source + ": header declares " + std::to_string(count) + " vectors, found " +
                    std::to_string(table.size()));
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_embeddings(in, path.string());
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[32];
  for (const auto& tok : table.tokens()) {
    out << tok;
    const auto vec = *table.find(tok);
    for (double x : vec) {
      std::snprintf(buf, sizeof buf, " %.6g", x);
      out << buf;
    }
    out << '\n';
  }
}

namespace {

void l2_normalize(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  if (n > 0.0) {
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
  }
}

}  // namespace

std::optional<std::vector<double>> embed_doc(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                                             std::size_t max_tokens) {
  std::vector<double> sum(table.dim(), 0.0);
  std::size_t hits = 0;
  const std::size_t limit = std::min(tokens.size(), max_tokens);
  for (std::size_t i = 0; i < limit; ++i) {
    auto v = table.find(tokens[i]);
    if (!v) continue;
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += (*v)[k];
    ++hits;
  }
  if (hits == 0) return std::nullopt;
  for (auto& x : sum) x /= static_cast<double>(hits);
  l2_normalize(sum);
  return sum;
}

WordFreqs estimate_word_freqs(std::span<const std::vector<std::string>> docs) {
  WordFreqs f;
  double total = 0.0;
  for (const auto& d : docs) {
    for (const auto& t : d) f.prob[t] += 1.0;
    total += static_cast<double>(d.size());
  }
  if (total > 0)
    for (auto& [_, p] : f.prob) p /= total;
  return f;
}

std::optional<std::vector<double>> sif_embed(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                                             const WordFreqs& freqs, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("sif_embed: a must be positive");
  std::vector<double> sum(table.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& t : tokens) {
    auto v = table.find(t);
    if (!v) continue;
    auto it = freqs.prob.find(t);
    const double p = it == freqs.prob.end() ? 0.0 : it->second;
    const double w = a / (a + p);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += w * (*v)[k];
    ++hits;
  }
  if (hits == 0) return std::nullopt;
  for (auto& x : sum) x /= static_cast<double>(hits);
  return sum;
}

SifModel SifModel::fit(std::span<const std::vector<std::string>> train_docs, const EmbeddingTable& table, double a) {
  SifModel m;
  m.a_ = a;
  m.freqs_ = estimate_word_freqs(train_docs);
  const auto d = static_cast<Eigen::Index>(table.dim());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  std::size_t rows = 0;
  for (const auto& doc : train_docs) {
    auto v = sif_embed(doc, table, m.freqs_, a);
    if (!v) continue;
    Eigen::Map<const Eigen::VectorXd> x(v->data(), d);
    gram.noalias() += x * x.transpose();
    ++rows;
  }
  m.component_.assign(table.dim(), 0.0);
  if (rows == 0) return m;
  // first right singular vector of the uncentered matrix
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  Eigen::VectorXd u = es.eigenvectors().col(d - 1);
  Eigen::Index arg = 0;
  u.cwiseAbs().maxCoeff(&arg);
  if (u(arg) < 0) u = -u;
  for (Eigen::Index k = 0; k < d; ++k) m.component_[static_cast<std::size_t>(k)] = u(k);
  return m;
}

std::optional<std::vector<double>> SifModel::transform(const std::vector<std::string>& tokens,
                                                       const EmbeddingTable& table) const {
  auto v = sif_embed(tokens, table, freqs_, a_);
  if (!v) return v;
  if (component_.size() != v->size()) throw DataError("SifModel: embedding dimension differs from fit");
  double proj = 0.0;
  for (std::size_t k = 0; k < v->size(); ++k) proj += component_[k] * (*v)[k];
  for (std::size_t k = 0; k < v->size(); ++k) (*v)[k] -= proj * component_[k];
  return v;
}

TableCommentVectors::TableCommentVectors(std::shared_ptr<const EmbeddingTable> table, std::size_t max_tokens)
    : table_(std::move(table)), max_tokens_(max_tokens) {
  if (!table_) throw std::invalid_argument("TableCommentVectors: null table");
}

std::optional<std::vector<double>> TableCommentVectors::vector_for(const Comment& c) const {
  if (c.body_deleted) return std::nullopt;
  return embed_doc(text::tokenize(c.body), *table_, max_tokens_);
}

void DocumentVectors::add(std::string id, std::vector<double> v) {
  if (v.size() != dim_) throw DataError("document vector for " + id + " has wrong dimension");
  vecs_.insert_or_assign(std::move(id), std::move(v));
}

std::optional<std::vector<double>> DocumentVectors::find(const std::string& id) const {
  auto it = vecs_.find(id);
  if (it == vecs_.end()) return std::nullopt;
  return it->second;
}

DocumentVectors read_document_vectors(std::istream& in) {
  std::string line;
  std::size_t lineno = 0, dim = 0;
  std::optional<DocumentVectors> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      auto c = rest.find(',');
      fields.push_back(rest.substr(0, c));
      if (c == std::string_view::npos) break;
      rest.remove_prefix(c + 1);
    }
    if (fields.size() < 2) throw DataError("document vectors:" + std::to_string(lineno) + ": expected id and values");
    std::vector<double> v(fields.size() - 1);
    bool numeric = true;
    for (std::size_t k = 1; k < fields.size(); ++k) numeric = numeric && parse_double(fields[k], v[k - 1]);
    if (!numeric) {
      if (lineno == 1) continue;  // header row
      throw DataError("document vectors:" + std::to_string(lineno) + ": bad value");
    }
    if (!out) {
      dim = v.size();
      out.emplace(dim);
    }
    if (v.size() != dim) throw DataError("document vectors:" + std::to_string(lineno) + ": dimension mismatch");
    out->add(std::string(fields[0]), std::move(v));
  }
  if (!out) throw DataError("document vectors: no rows");
  return std::move(*out);
}

DocumentVectors load_document_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_document_vectors(in);
}

// ---------------------------------------------------------------------------
// PCA

PcaProjection pca_fit(const Eigen::MatrixXd& train, std::size_t d_out) {
  const auto d = static_cast<std::size_t>(train.cols());
  if (d_out > d) throw std::invalid_argument("pca_fit: d_out exceeds feature count");
  if (train.rows() < 2) throw std::invalid_argument("pca_fit: need at least two rows");
  PcaProjection p;
  p.mean = train.colwise().mean().transpose();
  Eigen::MatrixXd centered = train.rowwise() - p.mean.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(train.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw std::runtime_error("pca_fit: eigendecomposition failed");
  const auto k = static_cast<Eigen::Index>(d_out);
  p.components.resize(k, static_cast<Eigen::Index>(d));
  p.eigenvalues.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index col = static_cast<Eigen::Index>(d) - 1 - i;  // ascending order from Eigen
    Eigen::VectorXd u = es.eigenvectors().col(col);
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0) u = -u;
    p.components.row(i) = u.transpose();
    p.eigenvalues(i) = std::max(0.0, es.eigenvalues()(col));
  }
  return p;
}

Eigen::VectorXd pca_apply(const PcaProjection& proj, const Eigen::VectorXd& x) {
  if (x.size() != proj.mean.size()) throw std::invalid_argument("pca_apply: dimension mismatch");
  return proj.components * (x - proj.mean);
}

}  // namespace contro

#include "blast/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "blast/errors.hpp"

namespace blast {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, const std::string& path,
                  std::size_t line_no, std::size_t col_no) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  // Tolerate surrounding spaces.
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' ||
                         *(end - 1) == '\r')) {
    --end;
  }
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end || begin == end) {
    std::ostringstream msg;
    msg << path << ": line " << line_no << ": non-numeric cell '" << cell
        << "' in column " << col_no + 1;
    throw InputError(msg.str());
  }
  return value;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path,
                         const std::string& outcome_column,
                         std::vector<std::string>* column_names_out) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(strip_cr(line));
  if (header.empty()) throw InputError(path + ": empty header row");

  std::ptrdiff_t outcome_idx = -1;
  std::vector<std::string> predictors;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == outcome_column) {
      if (outcome_idx >= 0) {
        throw InputError(path + ": duplicate outcome column '" +
                         outcome_column + "'");
      }
      outcome_idx = static_cast<std::ptrdiff_t>(j);
    } else {
      predictors.push_back(header[j]);
    }
  }
  if (outcome_idx < 0) {
    throw InputError(path + ": missing outcome column '" + outcome_column +
                     "'");
  }
  if (predictors.empty()) {
    throw InputError(path + ": no predictor columns");
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = strip_cr(line);
    if (stripped.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(stripped);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << path << ": line " << line_no << ": expected " << header.size()
          << " cells, found " << cells.size();
      throw InputError(msg.str());
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      row[j] = parse_cell(cells[j], path, line_no, j);
    }
    rows.push_back(std::move(row));
  }

  Dataset d;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(predictors.size());
  d.design.resize(n, p);
  d.outcome.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (static_cast<std::ptrdiff_t>(j) == outcome_idx) {
        d.outcome[i] = rows[i][j];
      } else {
        d.design(i, col++) = rows[i][j];
      }
    }
  }
  if (column_names_out != nullptr) *column_names_out = predictors;
  return d;
}

ProblemBundle load_problem(const std::string& target_path,
                           const std::vector<std::string>& source_paths,
                           const LoadOptions& options) {
  ProblemBundle bundle;
  std::vector<std::string> target_cols;
  bundle.target =
      load_dataset_csv(target_path, options.outcome_column, &target_cols);
  bundle.target.study_id = 0;
  bundle.target.role = StudyRole::target;
  bundle.column_names = target_cols;
  if (bundle.target.rows() == 0) {
    throw InputError(target_path + ": target has no data rows");
  }

  int id = 1;
  for (const auto& path : source_paths) {
    std::vector<std::string> cols;
    Dataset src = load_dataset_csv(path, options.outcome_column, &cols);
    if (cols != target_cols) {
      throw InputError(path + ": predictor headers do not match " +
                       target_path);
    }
    src.study_id = id++;
    src.role = StudyRole::source;
    bundle.sources.push_back(std::move(src));
  }

  StandardizationRecord rec;
  rec.applied = options.standardize;
  const Eigen::Index p = bundle.target.cols();
  rec.predictor_mean = Eigen::VectorXd::Zero(p);
  rec.predictor_sd = Eigen::VectorXd::Ones(p);
  if (options.standardize) {
    Eigen::Index total = bundle.target.rows();
    for (const auto& s : bundle.sources) total += s.rows();
    Eigen::VectorXd sum = bundle.target.design.colwise().sum();
    for (const auto& s : bundle.sources) sum += s.design.colwise().sum();
    rec.predictor_mean = sum / static_cast<double>(total);
    Eigen::VectorXd sq =
        (bundle.target.design.rowwise() - rec.predictor_mean.transpose())
            .array()
            .square()
            .colwise()
            .sum();
    for (const auto& s : bundle.sources) {
      sq += (s.design.rowwise() - rec.predictor_mean.transpose())
                .array()
                .square()
                .colwise()
                .sum()
                .matrix();
    }
    if (total < 2) throw InputError("standardization needs at least 2 rows");
    rec.predictor_sd =
        (sq / static_cast<double>(total - 1)).array().sqrt();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(rec.predictor_sd[j] > 0.0)) {
        throw InputError("constant predictor column '" +
                         bundle.column_names[static_cast<std::size_t>(j)] +
                         "' cannot be standardized");
      }
    }

    const auto apply = [&](Dataset& d) {
      d.design = (d.design.rowwise() - rec.predictor_mean.transpose());
      d.design.array().rowwise() /= rec.predictor_sd.transpose().array();
      const double mean = d.rows() > 0 ? d.outcome.mean() : 0.0;
      rec.outcome_mean.push_back(mean);
      d.outcome.array() -= mean;
    };
    apply(bundle.target);
    for (auto& s : bundle.sources) apply(s);
  }
  bundle.standardization = rec;
  return bundle;
}

Eigen::VectorXd unstandardize_coefficients(const Eigen::VectorXd& beta,
                                           const StandardizationRecord& rec) {
  if (!rec.applied) return beta;
  if (beta.size() != rec.predictor_sd.size()) {
    throw InputError("unstandardize_coefficients: length mismatch");
  }
  return beta.array() / rec.predictor_sd.array();
}

void write_draws_csv(const std::string& path, const PosteriorDraws& draws) {
  std::ostringstream os;
  const Eigen::Index p = draws.p;
  const auto num_studies = static_cast<Eigen::Index>(draws.num_studies);
  const bool selection = draws.mode == SamplerMode::selection;

  for (Eigen::Index j = 0; j < p; ++j) {
    if (j > 0) os << ',';
    os << "beta_" << (j + 1);
  }
  if (selection) {
    for (Eigen::Index k = 0; k < num_studies; ++k) os << ",gamma_" << (k + 1);
  }
  for (const auto& name : draws.variance_names) os << ",sigma2_" << name;
  os << '\n';

  const std::size_t begin = draws.retained_begin();
  for (const auto& chain : draws.chains) {
    for (std::size_t r = begin; r < draws.stored_per_chain(); ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      for (Eigen::Index j = 0; j < p; ++j) {
        if (j > 0) os << ',';
        os << format_double(chain.beta(row, j));
      }
      if (selection) {
        for (Eigen::Index k = 0; k < num_studies; ++k) {
          os << ',' << format_double(chain.gamma(row, k));
        }
      }
      for (Eigen::Index b = 0; b < chain.variances.cols(); ++b) {
        os << ',' << format_double(chain.variances(row, b));
      }
      os << '\n';
    }
  }
  write_text_file(path, os.str());
}

LoadedDraws read_draws_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty draws file");
  const std::vector<std::string> header = split_csv_line(strip_cr(line));

  std::vector<std::size_t> beta_cols, gamma_cols, var_cols;
  std::vector<std::string> variance_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string& h = header[j];
    if (h.rfind("beta_", 0) == 0) {
      beta_cols.push_back(j);
    } else if (h.rfind("gamma_", 0) == 0) {
      gamma_cols.push_back(j);
    } else if (h.rfind("sigma2_", 0) == 0) {
      var_cols.push_back(j);
      variance_names.push_back(h.substr(7));
    } else {
      throw InputError(path + ": unexpected draws column '" + h + "'");
    }
  }
  if (beta_cols.empty()) {
    throw InputError(path + ": draws file has no beta columns");
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = strip_cr(line);
    if (stripped.empty()) continue;
    const auto cells = split_csv_line(stripped);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << path << ": line " << line_no << ": expected " << header.size()
          << " cells, found " << cells.size();
      throw InputError(msg.str());
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      row[j] = parse_cell(cells[j], path, line_no, j);
    }
    rows.push_back(std::move(row));
  }

  LoadedDraws out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.beta.resize(n, static_cast<Eigen::Index>(beta_cols.size()));
  out.gamma.resize(n, static_cast<Eigen::Index>(gamma_cols.size()));
  out.variances.resize(n, static_cast<Eigen::Index>(var_cols.size()));
  out.variance_names = variance_names;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < beta_cols.size(); ++j) {
      out.beta(i, static_cast<Eigen::Index>(j)) = rows[i][beta_cols[j]];
    }
    for (std::size_t j = 0; j < gamma_cols.size(); ++j) {
      out.gamma(i, static_cast<Eigen::Index>(j)) = rows[i][gamma_cols[j]];
    }
    for (std::size_t j = 0; j < var_cols.size(); ++j) {
      out.variances(i, static_cast<Eigen::Index>(j)) = rows[i][var_cols[j]];
    }
  }
  return out;
}

PosteriorDraws draws_from_loaded(const LoadedDraws& loaded) {
  PosteriorDraws draws;
  draws.mode = loaded.gamma.cols() > 0 ? SamplerMode::selection
                                       : SamplerMode::oracle;
  draws.iterations = static_cast<std::size_t>(loaded.beta.rows());
  draws.burn_in = 0;
  draws.thin = 1;
  draws.p = loaded.beta.cols();
  draws.num_studies = static_cast<std::size_t>(loaded.gamma.cols());
  draws.variance_names = loaded.variance_names;
  ChainDraws chain;
  chain.beta = loaded.beta;
  chain.gamma = loaded.gamma;
  chain.variances = loaded.variances;
  chain.global_shrink.resize(loaded.beta.rows(), 0);
  draws.chains.push_back(std::move(chain));
  return draws;
}

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), compact implementation for input digests.

namespace {

struct Sha256 {
  std::array<std::uint32_t, 8> h{0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u,
                                 0xa54ff53au, 0x510e527fu, 0x9b05688cu,
                                 0x1f83d9abu, 0x5be0cd19u};
  std::array<std::uint8_t, 64> block{};
  std::size_t block_len = 0;
  std::uint64_t total_bits = 0;

  static std::uint32_t rotr(std::uint32_t x, int k) {
    return (x >> k) | (x << (32 - k));
  }

  void process(const std::uint8_t* chunk) {
    static const std::uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b,
        0x59f111f1, 0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01,
        0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7,
        0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc,
        0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152,
        0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
        0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
        0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819,
        0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116, 0x1e376c08,
        0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f,
        0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
        0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i) {
      w[i] = (std::uint32_t(chunk[4 * i]) << 24) |
             (std::uint32_t(chunk[4 * i + 1]) << 16) |
             (std::uint32_t(chunk[4 * i + 2]) << 8) |
             std::uint32_t(chunk[4 * i + 3]);
    }
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 =
          rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 =
          rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    auto a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6],
         hh = h[7];
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t temp1 = hh + s1 + ch + k[i] + w[i];
      const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t temp2 = s0 + maj;
      hh = g;
      g = f;
      f = e;
      e = d + temp1;
      d = c;
      c = b;
      b = a;
      a = temp1 + temp2;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
    h[5] += f;
    h[6] += g;
    h[7] += hh;
  }

  void update(const std::uint8_t* data, std::size_t size) {
    total_bits += std::uint64_t(size) * 8;
    while (size > 0) {
      const std::size_t take = std::min(size, block.size() - block_len);
      std::memcpy(block.data() + block_len, data, take);
      block_len += take;
      data += take;
      size -= take;
      if (block_len == block.size()) {
        process(block.data());
        block_len = 0;
      }
    }
  }

  std::string finish() {
    const std::uint64_t bits = total_bits;
    const std::uint8_t pad = 0x80;
    update(&pad, 1);
    const std::uint8_t zero = 0x00;
    while (block_len != 56) update(&zero, 1);
    std::uint8_t len[8];
    for (int i = 0; i < 8; ++i) {
      len[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
    }
    update(len, 8);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint32_t word : h) {
      for (int shift = 28; shift >= 0; shift -= 4) {
        out.push_back(hex[(word >> shift) & 0xF]);
      }
    }
    return out;
  }
};

}  // namespace

std::string sha256_bytes(const void* data, std::size_t size) {
  Sha256 hasher;
  hasher.update(static_cast<const std::uint8_t*>(data), size);
  return hasher.finish();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file for digest: " + path);
  Sha256 hasher;
  std::array<char, 65536> buf;
  while (in.read(buf.data(), buf.size()) || in.gcount() > 0) {
    hasher.update(reinterpret_cast<const std::uint8_t*>(buf.data()),
                  static_cast<std::size_t>(in.gcount()));
  }
  return hasher.finish();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open file for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InputError("failed writing file: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace blast

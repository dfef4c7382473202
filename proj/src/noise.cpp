#include "sgdchain/noise.hpp"

#include "text.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace sgdchain {

double sample_student_t(RngStream& stream, double df, double scale) {
  return stream.student_t(df, scale);
}

RegressionDataset gen_regression_data(std::size_t m, std::size_t d, double noise_df,
                                      RngStream& stream) {
  if (m < 1 || d < 1) throw InvalidArgument("gen_regression_data: m and d must be >= 1");
  if (!(noise_df > 0.0)) throw InvalidArgument("gen_regression_data: noise_df must be positive");

  RegressionDataset data;
  data.meta = {m, d, noise_df, stream.seed()};

  Vector theta_true(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < theta_true.size(); ++j) theta_true[j] = stream.uniform();
  data.theta_true = Point(theta_true);

  const double entry = 1.0 / std::sqrt(static_cast<double>(d));
  data.X.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  data.y.resize(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
      data.X(i, j) = (stream() >> 63) ? entry : -entry;
    }
    data.y[i] = data.X.row(i).dot(theta_true) + stream.student_t(noise_df, 1.0);
  }
  return data;
}

std::pair<std::filesystem::path, std::filesystem::path> write_regression_data(
    const RegressionDataset& data, const std::filesystem::path& stem) {
  std::filesystem::path csv_path = stem;
  csv_path += ".csv";
  std::filesystem::path json_path = stem;
  json_path += ".json";
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());

  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw Error("cannot write " + csv_path.string());
  csv << "y";
  for (std::size_t j = 0; j < data.cols(); ++j) csv << ",x" << (j + 1);
  csv << '\n';
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    csv << text::format_double(data.y[i]);
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) csv << ',' << text::format_double(data.X(i, j));
    csv << '\n';
  }
  if (!csv) throw Error("write failed: " + csv_path.string());

  nlohmann::json meta = {{"m", data.meta.m},
                         {"d", data.meta.d},
                         {"noise_df", data.meta.noise_df},
                         {"seed", data.meta.seed}};
  if (data.theta_true) {
    const Vector& t = data.theta_true->coords();
    meta["theta_true"] = std::vector<double>(t.data(), t.data() + t.size());
  }
  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw Error("cannot write " + json_path.string());
  js << meta.dump(2) << '\n';
  return {csv_path, json_path};
}

RegressionDataset read_regression_data(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw InvalidArgument("cannot open dataset " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty dataset " + csv_path.string());
  const auto header = text::split(line, ',');
  if (header.size() < 2 || header[0] != "y") {
    throw InvalidArgument("dataset header must be y,x1,...,xd");
  }
  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(line, ',');
    if (cells.size() != d + 1) {
      throw InvalidArgument("dataset row " + std::to_string(rows + 1) + " has " +
                            std::to_string(cells.size()) + " columns, expected " +
                            std::to_string(d + 1));
    }
    for (const auto& c : cells) values.push_back(text::parse_double(c));
    ++rows;
  }
  if (rows == 0) throw InvalidArgument("dataset has no rows");

  RegressionDataset data;
  data.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  data.y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    data.y[static_cast<Eigen::Index>(i)] = values[i * (d + 1)];
    for (std::size_t j = 0; j < d; ++j) {
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * (d + 1) + j + 1];
    }
  }
  data.meta.m = rows;
  data.meta.d = d;

  std::filesystem::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  if (std::filesystem::exists(sidecar)) {
    std::ifstream js(sidecar);
    const auto meta = nlohmann::json::parse(js);
    data.meta.noise_df = meta.value("noise_df", 0.0);
    data.meta.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("theta_true")) {
      const auto t = meta["theta_true"].get<std::vector<double>>();
      if (t.size() != d) throw InvalidArgument("sidecar theta_true has wrong dimension");
      data.theta_true = Point(Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size())));
    }
  }
  return data;
}

// ---------------------------------------------------------------------------

NoiseModel NoiseModel::none() { return NoiseModel(); }

NoiseModel NoiseModel::gaussian(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian noise: sigma must be positive");
  NoiseModel n;
  n.kind_ = Kind::gaussian_iid;
  n.sigma_ = sigma;
  return n;
}

NoiseModel NoiseModel::student_t(double df, double scale) {
  if (!(df > 0.0)) throw InvalidArgument("student-t noise: df must be positive");
  if (!(scale > 0.0)) throw InvalidArgument("student-t noise: scale must be positive");
  NoiseModel n;
  n.kind_ = Kind::student_t_iid;
  n.df_ = df;
  n.scale_ = scale;
  return n;
}

NoiseModel NoiseModel::minibatch(std::shared_ptr<const FiniteSumObjective> objective,
                                 std::size_t batch_size, bool with_replacement) {
  if (!objective) throw InvalidArgument("minibatch noise: objective is null");
  if (batch_size < 1) throw InvalidArgument("minibatch noise: batch size must be positive");
  if (!with_replacement && batch_size > objective->sample_count()) {
    throw InvalidArgument("minibatch noise: batch larger than the dataset without replacement");
  }
  NoiseModel n;
  n.kind_ = Kind::minibatch;
  n.batch_size_ = batch_size;
  n.with_replacement_ = with_replacement;
  n.data_objective_ = std::move(objective);
  return n;
}

void NoiseModel::minibatch_mean_gradient(const Vector& theta, RngStream& stream, Vector& out) const {
  const std::size_t m = data_objective_->sample_count();
  out.setZero(theta.size());
  Vector g(theta.size());
  auto add = [&](std::size_t i) {
    data_objective_->sample_gradient(theta, i, g);
    out += g;
  };
  if (with_replacement_) {
    for (std::size_t j = 0; j < batch_size_; ++j) add(stream.below(m));
  } else {
    // Selection sampling: each index kept with probability needed/remaining.
    std::size_t needed = batch_size_;
    for (std::size_t i = 0; i < m && needed > 0; ++i) {
      if (needed == m - i || stream.uniform() * static_cast<double>(m - i) < static_cast<double>(needed)) {
        add(i);
        --needed;
      }
    }
  }
  out /= static_cast<double>(batch_size_);
  if (!all_finite(out)) throw EvaluationError("minibatch noise: non-finite per-sample gradient");
}

void NoiseModel::draw(const Vector& theta, RngStream& stream, Vector& out) const {
  const Eigen::Index d = theta.size();
  out.resize(d);
  switch (kind_) {
    case Kind::none:
      out.setZero();
      return;
    case Kind::gaussian_iid:
      for (Eigen::Index i = 0; i < d; ++i) out[i] = sigma_ * stream.normal();
      return;
    case Kind::student_t_iid:
      for (Eigen::Index i = 0; i < d; ++i) out[i] = stream.student_t(df_, scale_);
      return;
    case Kind::minibatch: {
      minibatch_mean_gradient(theta, stream, out);
      Vector full(d);
      data_objective_->gradient(theta, full);
      out -= full;
      return;
    }
  }
}

Vector NoiseModel::draw(const Vector& theta, RngStream& stream) const {
  Vector out(theta.size());
  draw(theta, stream, out);
  return out;
}

void NoiseModel::stochastic_gradient(const Objective& objective, const Vector& theta,
                                     RngStream& stream, Vector& out) const {
  if (kind_ == Kind::minibatch) {
    minibatch_mean_gradient(theta, stream, out);
    return;
  }
  objective.gradient(theta, out);
  switch (kind_) {
    case Kind::none:
    case Kind::minibatch:
      return;
    case Kind::gaussian_iid:
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += sigma_ * stream.normal();
      return;
    case Kind::student_t_iid:
      for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += stream.student_t(df_, scale_);
      return;
  }
}

std::optional<double> NoiseModel::moment_constant(std::size_t dim) const {
  const double d = static_cast<double>(dim);
  switch (kind_) {
    case Kind::none:
      return 0.0;
    case Kind::gaussian_iid: {
      const double v = sigma_ * sigma_;
      const double second = std::sqrt(d * v);
      const double fourth = v * v * (d * d + 2.0 * d);
      return std::max(second, fourth);
    }
    case Kind::student_t_iid: {
      if (df_ <= 4.0) {
        throw PreconditionError("student-t noise with df <= 4 has no finite fourth moment");
      }
      const double s2 = scale_ * scale_;
      const double v = s2 * df_ / (df_ - 2.0);
      const double m4 = s2 * s2 * 3.0 * df_ * df_ / ((df_ - 2.0) * (df_ - 4.0));
      const double second = std::sqrt(d * v);
      const double fourth = d * m4 + d * (d - 1.0) * v * v;
      return std::max(second, fourth);
    }
    case Kind::minibatch:
      return std::nullopt;
  }
  return std::nullopt;
}

std::string NoiseModel::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::none:
      os << "none";
      break;
    case Kind::gaussian_iid:
      os << "gaussian(sigma=" << sigma_ << ")";
      break;
    case Kind::student_t_iid:
      os << "student-t(df=" << df_ << ", scale=" << scale_ << ")";
      break;
    case Kind::minibatch:
      os << "minibatch(b=" << batch_size_ << (with_replacement_ ? "" : ", without replacement")
         << ")";
      break;
  }
  return os.str();
}

}  // namespace sgdchain

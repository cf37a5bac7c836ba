#include "ddc/identify.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ddc/errors.hpp"

namespace ddc {

IdentifiedModel identify_lti(const DataMatrices& dm) {
  const Mat stacked = stack_UX(dm.U0, dm.X0);
  const Richness rich = check_richness(stacked, dm.m() + dm.n());
  if (!rich.satisfied) {
    throw RankDeficient(
        "identify_lti: [U0; X0] numerical rank " + std::to_string(rich.numerical_rank) +
            " < " + std::to_string(dm.m() + dm.n()) +
            "; collect a longer horizon or richer inputs",
        rich.numerical_rank);
  }
  IdentifiedModel model;
  model.m = dm.m();
  model.n = dm.n();
  model.blocks.push_back(dm.X1 * right_pseudo_inverse(stacked));
  model.condition_numbers.push_back(condition_number(stacked));
  return model;
}

Mat structured_pseudo_inverse(const Mat& U_i0, const Mat& X_i0,
                              const std::vector<int>& nonzero_cols) {
  const int T = static_cast<int>(U_i0.cols());
  const int rows = static_cast<int>(U_i0.rows() + X_i0.rows());
  if (static_cast<int>(nonzero_cols.size()) < rows) {
    throw RankDeficient("structured_pseudo_inverse: only " +
                            std::to_string(nonzero_cols.size()) +
                            " occurrences for a mode needing rank " + std::to_string(rows),
                        static_cast<int>(nonzero_cols.size()));
  }
  const Mat sub = select_columns(stack_UX(U_i0, X_i0), nonzero_cols);
  const Mat sub_pinv = right_pseudo_inverse(sub);  // throws on rank deficiency
  Mat out = Mat::Zero(T, rows);
  for (std::size_t r = 0; r < nonzero_cols.size(); ++r) {
    out.row(nonzero_cols[r]) = sub_pinv.row(static_cast<Eigen::Index>(r));
  }
  return out;
}

IdentifiedModel identify_switched(const DataMatrices& dm, const ModeMasked& masked) {
  IdentifiedModel model;
  model.m = dm.m();
  model.n = dm.n();
  std::vector<int> failing;
  for (int i = 0; i < masked.gamma; ++i) {
    try {
      const Mat spinv = structured_pseudo_inverse(masked.U[i], masked.X[i],
                                                  masked.nonzero_cols[i]);
      model.blocks.push_back(dm.X1 * spinv);
      const Mat sub = select_columns(stack_UX(masked.U[i], masked.X[i]),
                                     masked.nonzero_cols[i]);
      model.condition_numbers.push_back(condition_number(sub));
    } catch (const RankDeficient&) {
      failing.push_back(i + 1);
    }
  }
  if (!failing.empty()) {
    std::ostringstream msg;
    msg << "identify_switched: per-mode richness fails for mode(s)";
    for (int i : failing) msg << " " << i;
    throw RankDeficient(msg.str(), 0);
  }
  return model;
}

std::string to_json(const IdentifiedModel& model) {
  nlohmann::json j;
  j["mode_count"] = model.blocks.size();
  j["m"] = model.m;
  j["n"] = model.n;
  j["path"] = model.path;
  j["condition_numbers"] = model.condition_numbers;
  auto& blocks = j["blocks"] = nlohmann::json::array();
  for (const Mat& b : model.blocks) {
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(b.size()));
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < b.cols(); ++c) row_major.push_back(b(r, c));
    blocks.push_back(row_major);
  }
  return j.dump(2);
}

IdentifiedModel identified_model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  IdentifiedModel model;
  model.m = j.at("m").get<int>();
  model.n = j.at("n").get<int>();
  model.path = j.at("path").get<std::string>();
  model.condition_numbers = j.at("condition_numbers").get<std::vector<double>>();
  for (const auto& arr : j.at("blocks")) {
    const auto vals = arr.get<std::vector<double>>();
    if (static_cast<int>(vals.size()) != model.n * (model.m + model.n)) {
      throw IoError("identified model json: block size mismatch");
    }
    Mat b(model.n, model.m + model.n);
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      for (Eigen::Index c = 0; c < b.cols(); ++c) b(r, c) = vals[at++];
    model.blocks.push_back(std::move(b));
  }
  return model;
}

Basis make_basis(const std::string& description, int input_dim) {
  struct Feature {
    enum Kind { one, power, sine, cosine } kind;
    double exponent = 1.0;
  };
  std::vector<Feature> feats;
  std::stringstream ss(description);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "1") {
      feats.push_back({Feature::one});
    } else if (tok == "sin") {
      feats.push_back({Feature::sine});
    } else if (tok == "cos") {
      feats.push_back({Feature::cosine});
    } else if (tok.rfind("u^", 0) == 0) {
      feats.push_back({Feature::power, std::stod(tok.substr(2))});
    } else {
      throw InvalidInput("make_basis: unknown feature '" + tok + "'");
    }
  }
  if (feats.empty()) throw InvalidInput("make_basis: empty description");

  int p = 0;
  for (const auto& f : feats) p += (f.kind == Feature::one) ? 1 : input_dim;

  Basis basis;
  basis.input_dim = input_dim;
  basis.output_dim = p;
  basis.description = description;
  basis.fn = [feats, input_dim, p](const Vec& u) {
    if (u.size() != input_dim) throw InvalidInput("basis: input dimension mismatch");
    Vec out(p);
    int at = 0;
    for (const auto& f : feats) {
      switch (f.kind) {
        case Feature::one:
          out(at++) = 1.0;
          break;
        case Feature::power:
          for (int i = 0; i < input_dim; ++i) out(at++) = std::pow(u(i), f.exponent);
          break;
        case Feature::sine:
          for (int i = 0; i < input_dim; ++i) out(at++) = std::sin(u(i));
          break;
        case Feature::cosine:
          for (int i = 0; i < input_dim; ++i) out(at++) = std::cos(u(i));
          break;
      }
    }
    return out;
  };
  return basis;
}

BasisEstimate identify_basis(const Mat& us, const Mat& ys, const Basis& basis) {
  if (us.cols() != ys.cols()) throw InvalidInput("identify_basis: sample counts differ");
  if (us.cols() < 1) throw InvalidInput("identify_basis: no samples");
  Mat phi(basis.output_dim, us.cols());
  for (Eigen::Index k = 0; k < us.cols(); ++k) phi.col(k) = basis.fn(us.col(k));
  const Richness rich = check_richness(phi, basis.output_dim);
  if (!rich.satisfied) {
    throw RankDeficient("identify_basis: basis matrix rank " +
                            std::to_string(rich.numerical_rank) + " < " +
                            std::to_string(basis.output_dim) +
                            "; data does not excite every basis direction",
                        rich.numerical_rank);
  }
  BasisEstimate est;
  est.A = ys * right_pseudo_inverse(phi);
  est.basis = basis.description;
  est.cond_phi = condition_number(phi);
  return est;
}

}  // namespace ddc

#include "rrmix/report.hpp"

#include <fstream>

namespace rrmix {

namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

Json model_to_json(const MixtureRegressionModel& model) {
  Json j;
  j["pi"] = vector_to_json(model.pi);
  Json betas = Json::array();
  for (const Matrix& b : model.beta) betas.push_back(matrix_to_json(b));
  j["beta"] = std::move(betas);
  Json sigmas = Json::array();
  for (const Vector& s : model.sigma_diag) sigmas.push_back(vector_to_json(s));
  j["sigma_diag"] = std::move(sigmas);
  return j;
}

MixtureRegressionModel model_from_json(const Json& j) {
  MixtureRegressionModel model;
  model.pi = vector_from_json(j.at("pi"));
  for (const Json& b : j.at("beta")) model.beta.push_back(matrix_from_json(b));
  for (const Json& s : j.at("sigma_diag")) model.sigma_diag.push_back(vector_from_json(s));
  model.validate();
  return model;
}

Json index_to_json(const ModelIndex& index) {
  Json j;
  j["K"] = index.K;
  Json cols = Json::array();
  for (int c : index.J) cols.push_back(c + 1);  // 1-based in reports
  j["J"] = std::move(cols);
  j["R"] = index.R;
  return j;
}

ModelIndex index_from_json(const Json& j) {
  ModelIndex index;
  index.K = j.at("K").get<int>();
  for (const Json& c : j.at("J")) index.J.push_back(c.get<int>() - 1);
  index.R = j.at("R").get<std::vector<int>>();
  return index;
}

Json fitted_to_json(const FittedModel& fit) {
  Json j;
  j["index"] = index_to_json(fit.index);
  j["model"] = model_to_json(fit.model);
  j["loglik"] = fit.loglik;
  j["dim_means"] = fit.dim_means;
  j["dim_full"] = fit.dim_full;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  return j;
}

FittedModel fitted_from_json(const Json& j) {
  FittedModel fit;
  fit.index = index_from_json(j.at("index"));
  fit.model = model_from_json(j.at("model"));
  fit.loglik = j.at("loglik").get<double>();
  fit.dim_means = j.at("dim_means").get<long>();
  fit.dim_full = j.at("dim_full").get<long>();
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = j.at("iterations").get<int>();
  return fit;
}

Json collection_to_json(const Collection& collection) {
  Json fits = Json::array();
  for (std::size_t i = 0; i < collection.fits.size(); ++i) {
    Json entry = fitted_to_json(collection.fits[i]);
    const Provenance& prov = collection.provenance[i];
    Json p;
    p["K"] = prov.K;
    p["lambda"] = prov.lambda;
    Json cols = Json::array();
    for (int c : prov.J) cols.push_back(c + 1);
    p["J"] = std::move(cols);
    p["R"] = prov.R;
    entry["provenance"] = std::move(p);
    fits.push_back(std::move(entry));
  }
  Json j;
  j["fits"] = std::move(fits);
  return j;
}

Collection collection_from_json(const Json& j) {
  Collection collection;
  for (const Json& entry : j.at("fits")) {
    collection.fits.push_back(fitted_from_json(entry));
    Provenance prov;
    const Json& p = entry.at("provenance");
    prov.K = p.at("K").get<int>();
    prov.lambda = p.at("lambda").get<double>();
    for (const Json& c : p.at("J")) prov.J.push_back(c.get<int>() - 1);
    prov.R = p.at("R").get<std::vector<int>>();
    collection.provenance.push_back(std::move(prov));
  }
  return collection;
}

Json selection_to_json(const SelectionResult& sel) {
  Json j;
  j["mode"] = sel.mode;
  j["kappa_used"] = sel.kappa_used;
  j["fallback_bic"] = sel.fallback_bic;
  j["chosen"] = sel.chosen;
  Json table = Json::array();
  for (const CriterionRow& row : sel.table) {
    Json r;
    r["index"] = index_to_json(row.index);
    r["loglik"] = row.loglik;
    r["dim_means"] = row.dim_means;
    r["dim_full"] = row.dim_full;
    r["penalty"] = row.penalty;
    r["criterion"] = row.criterion;
    table.push_back(std::move(r));
  }
  j["table"] = std::move(table);
  return j;
}

Json eval_to_json(const EvalReport& report) {
  Json j;
  j["kl_mean"] = report.kl_mean;
  j["kl_se"] = report.kl_se;
  j["rank_median"] = report.rank_median;
  j["misses"] = report.misses;
  j["false_actives"] = report.false_actives;
  j["ari"] = report.ari;
  j["mse"] = report.mse;
  return j;
}

void write_report(const std::string& path, const Json& body) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("write_report: cannot open " + path);
  out << body.dump(2) << "\n";
}

Json read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("read_report: cannot open " + path);
  Json j;
  in >> j;
  return j;
}

}  // namespace rrmix

#include "rere/labels.hpp"

#include "rere/errors.hpp"

namespace rere {

Eigen::VectorXd rc_label_vector(const LabeledInstance& instance, const RelationCatalog& catalog) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(catalog.size()));
  for (const auto& t : instance.triples) {
    if (!catalog.contains(t.relation))
      throw CatalogError("relation id " + std::to_string(t.relation.value) + " not in catalog");
    y(static_cast<Eigen::Index>(t.relation.index())) = 1.0;
  }
  return y;
}

Eigen::MatrixXd ee_label_grid(const LabeledInstance& instance, RelationId relation) {
  Eigen::MatrixXd grid = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(instance.length()), 4);
  for (const auto& t : instance.triples) {
    if (t.relation != relation) continue;
    grid(static_cast<Eigen::Index>(t.subject.start), kSubjectStart) = 1.0;
    grid(static_cast<Eigen::Index>(t.subject.end), kSubjectEnd) = 1.0;
    grid(static_cast<Eigen::Index>(t.object.start), kObjectStart) = 1.0;
    grid(static_cast<Eigen::Index>(t.object.end), kObjectEnd) = 1.0;
  }
  return grid;
}

}  // namespace rere

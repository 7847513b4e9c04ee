#ifndef RERE_LABELS_HPP
#define RERE_LABELS_HPP

#include <Eigen/Dense>

#include "rere/datamodel.hpp"

namespace rere {

// Pointer columns of an N x 4 grid.
enum PointerColumn : int { kSubjectStart = 0, kSubjectEnd = 1, kObjectStart = 2, kObjectEnd = 3 };

// Binary |R| vector: 1 at every relation occurring in the instance. Throws
// CatalogError if a triple references a relation outside the catalog.
Eigen::VectorXd rc_label_vector(const LabeledInstance& instance, const RelationCatalog& catalog);

// Binary N x 4 grid marking the boundaries of every subject and object of
// T_i|r. A relation absent from the instance gives the all-zero grid.
Eigen::MatrixXd ee_label_grid(const LabeledInstance& instance, RelationId relation);

}  // namespace rere

#endif  // RERE_LABELS_HPP

#include "qbnorm/simkernel.hpp"

namespace qbnorm {

RowMatrixXd sim_matrix(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery) {
  if (queries.dim() != gallery.dim()) {
    throw ShapeError("query dim " + std::to_string(queries.dim()) + " vs gallery dim " +
                     std::to_string(gallery.dim()));
  }
  const RowMatrixXd g = normalised_rows(gallery);
  const RowMatrixXd q = normalised_rows(queries);
  RowMatrixXd out(q.rows(), g.rows());
  parallel_for(queries.rows(), [&](std::size_t i) {
    const Eigen::VectorXd qi = q.row(static_cast<Eigen::Index>(i)).transpose();
    out.row(static_cast<Eigen::Index>(i)) = similarities_normalised(g, qi).transpose();
  });
  return out;
}

}  // namespace qbnorm

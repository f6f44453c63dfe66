#pragma once

#include "msieve/em.hpp"
#include "msieve/mixture.hpp"
#include "msieve/sieve.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace msieve {

struct selection_row {
    int m = 0;
    int D = 0;
    bool ok = false;
    double contrast = 0.0;
    double penalty = 0.0;
    double shape = 0.0;  //!< penalty with kappa = 1
    double criterion = 0.0;
    std::string error;
    std::optional<fitted_model> fit;
};

struct selection_table {
    std::vector<selection_row> rows;
    int selected_m = 0;
    std::size_t n = 0;
    double kappa = 1.0;
    const selection_row& selected() const;
};

//! Criterion argmin with ties (within 1e-12) to the smallest m. Rows flagged
//! not ok are ignored. Throws selection_error when no row is ok.
int select_argmin(const std::vector<selection_row>& rows);

selection_table select_model(const sample& s, int m_lo, int m_hi, const sieve_config& cfg,
                             const em_config& em, unsigned threads = 1);

//! Recomputes penalty and criterion for another kappa without refitting.
selection_table reselect(const selection_table& t, double kappa);

struct kappa_calibration {
    double kappa_hat = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    double ci_low = 0.0;   //!< 95% band for kappa_hat
    double ci_high = 0.0;
    int rows_used = 0;
    //! dimension jump: kappa where the selected dimension drops the most
    double jump_kappa = 0.0;
    int jump_from_m = 0;
    int jump_to_m = 0;
    int selected_m_at_kappa_hat = 0;
};

//! Slope heuristic on the larger half of the m grid (Huber-weighted regression
//! of the contrast on the penalty shape); kappa_hat = 2 |slope|.
kappa_calibration calibrate_kappa(const selection_table& t);

std::string selection_csv(const selection_table& t);
nlohmann::json selection_json(const selection_table& t);

}  // namespace msieve

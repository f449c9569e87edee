#include <stdio.h>
#include <string.h>
#include "quantprec.h"

int main(void) {
    QpQuantizer *q = NULL;
    if (qp_quantizer_parse("ce:4", &q) != QP_STATUS_OK) return 1;
    QpDesign d;
    if (qp_optimal_design(q, 3.0, 0.0, &d) != QP_STATUS_OK) return 2;
    QpAsymptotic a;
    if (qp_asymptotic_sinr(q, 3.0, 0.0, "zf", 0.0, &a) != QP_STATUS_OK) return 3;
    qp_quantizer_free(q);

    if (qp_quantizer_parse("ce:3", &q) != QP_STATUS_INVALID_ARGUMENT) return 4;
    if (qp_last_error() == NULL) return 5;

    QpExperiment *e = NULL;
    if (qp_experiment_parse("table-phi --sigma 0", &e) != QP_STATUS_OK) return 6;
    char *csv = NULL;
    if (qp_experiment_run(e, 0, &csv) != QP_STATUS_OK) return 7;
    if (strncmp(csv, "bits,", 5) != 0) return 8;
    qp_string_free(csv);
    qp_experiment_free(e);

    printf("rho_star=%.6f zeta_star=%.6f zf_sinr=%.6f\n", d.rho_star, d.zeta_star, a.sinr);
    return 0;
}

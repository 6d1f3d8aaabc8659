#include <math.h>
#include <stdio.h>
#include "symfcs.h"

int main(void) {
    SymfcsModel *model = NULL;
    if (symfcs_model_new(0.5, 0.1, 0.1, 0.0, &model) != SYMFCS_STATUS_OK) return 1;
    SymfcsEngine *engine = NULL;
    if (symfcs_engine_new(model, &engine) != SYMFCS_STATUS_OK) return 2;

    double mu = NAN;
    SymfcsSector sector = SYMFCS_SECTOR_BOTH;
    if (symfcs_engine_mu(engine, 0.0, 0.0, SYMFCS_SECTOR_BOTH, &mu, &sector) != SYMFCS_STATUS_OK) return 3;
    if (fabs(mu) > 1e-10) return 4;

    SymfcsAverages avg;
    if (symfcs_engine_averages(engine, &avg) != SYMFCS_STATUS_OK) return 5;

    if (symfcs_model_new(0.5, -1.0, 0.1, 0.0, NULL) != SYMFCS_STATUS_NULL_POINTER) return 6;
    SymfcsModel *bad = NULL;
    if (symfcs_model_new(0.5, -1.0, 0.1, 0.0, &bad) != SYMFCS_STATUS_INVALID_PARAMS) return 7;
    if (bad != NULL || symfcs_last_error()[0] == '\0') return 8;

    printf("%s %.6f %.6f\n", symfcs_version(), avg.q_s, avg.a_s);
    symfcs_engine_free(engine);
    symfcs_model_free(model);
    return 0;
}

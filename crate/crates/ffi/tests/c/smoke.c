#include <math.h>
#include <stdio.h>
#include <string.h>
#include "gglab.h"

int main(void) {
    gglab_model *m = NULL;
    if (gglab_model_sk(6, 1.0, 0.5, 0.3, 42, 0, &m) != GGLAB_STATUS_OK) return 1;
    double psi = 0.0, log_z = 0.0;
    if (gglab_model_free_energy(m, &psi) != GGLAB_STATUS_OK) return 2;
    if (gglab_model_log_partition(m, &log_z) != GGLAB_STATUS_OK) return 3;
    if (fabs(6.0 * psi - log_z) > 1e-12) return 4;

    size_t count = 0;
    if (gglab_model_feature_averages(m, NULL, 0, &count) != GGLAB_STATUS_BUFFER_TOO_SMALL) return 5;
    if (count != gglab_model_feature_count(m)) return 6;

    int8_t spins[6 * 3];
    if (gglab_model_sample(m, 7, 3, spins, sizeof spins) != GGLAB_STATUS_OK) return 7;
    for (size_t i = 0; i < sizeof spins; i++)
        if (spins[i] != 1 && spins[i] != -1) return 8;
    gglab_model_free(m);

    gglab_model *big = NULL;
    if (gglab_model_sk(0, 1.0, 0.5, 0.3, 42, 0, &big) == GGLAB_STATUS_OK) return 9;
    char msg[256];
    if (gglab_last_error(msg, sizeof msg) == 0 || strlen(msg) == 0) return 10;
    printf("%.15f %s\n", psi, gglab_version());
    return 0;
}

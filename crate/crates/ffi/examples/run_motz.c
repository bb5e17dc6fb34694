/* Solves the Motz problem through the C interface and prints the leading
 * coefficients and the capacitance. */
#include <stdio.h>

#include "hybrid_bem.h"

static int check(HbemStatus status, const char *what) {
    if (status != HBEM_STATUS_OK) {
        char message[256];
        hbem_last_error_message(message, sizeof message);
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)status, message);
        return 1;
    }
    return 0;
}

int main(void) {
    HbemConfig *config = NULL;
    HbemResult *result = NULL;
    if (check(hbem_config_from_json("{\"n\": 100, \"m\": 20, \"n_alpha\": 2}", &config), "config"))
        return 1;
    if (check(hbem_config_set(config, "r", "0.1"), "set r"))
        return 1;
    if (check(hbem_run(config, &result), "run"))
        return 1;

    size_t count = 0;
    double alpha[16];
    hbem_result_alpha_count(result, 0, &count);
    if (check(hbem_result_alpha(result, 0, alpha, 16), "alpha"))
        return 1;
    HbemCapacitance cap;
    hbem_result_capacitance(result, &cap);
    printf("terms=%zu alpha1=%.3f alpha2=%.3f C=%.3f E=%.4f\n", count, alpha[0], alpha[1], cap.c_total,
           cap.e_percent);

    HbemResult *bad = NULL;
    hbem_config_set(config, "r", "2.0");
    if (hbem_run(config, &bad) != HBEM_STATUS_GEOMETRY)
        return 2;

    hbem_result_free(result);
    hbem_config_free(config);
    return 0;
}

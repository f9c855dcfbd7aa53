#include <stdio.h>
#include "acfid.h"

int main(void) {
    AcfidSpec *spec = NULL;
    AcfidSweep *sweep = NULL;
    AcfidDetection *det = NULL;
    if (acfid_spec_two_level(1.0, &spec) != ACFID_STATUS_OK) {
        fprintf(stderr, "%s\n", acfid_last_error());
        return 1;
    }
    acfid_sweep(spec, -5.0, 5.0, 2001, 0.0, &sweep);
    acfid_detect(spec, sweep, 0.0, &det);
    for (size_t i = 0; i < acfid_detection_len(det); i++) {
        AcfidEvent ev;
        acfid_detection_event(det, i, &ev);
        printf("%zu-%zu lambda*=%g c=%g\n", ev.level_lo, ev.level_hi, ev.lambda_star, ev.c_est);
    }
    acfid_detection_free(det);
    acfid_sweep_free(sweep);
    acfid_spec_free(spec);
    return 0;
}

#include <math.h>
#include <stdio.h>
#include "histories.h"

static int failures = 0;

#define CHECK(cond)                                             \
    do {                                                        \
        if (!(cond)) {                                          \
            fprintf(stderr, "check failed: %s\n", #cond);       \
            failures++;                                         \
        }                                                       \
    } while (0)

int main(void) {
    DhSpace *space = NULL;
    CHECK(dh_space_partial_decoherence(1.0, &space) == DH_STATUS_OK);

    size_t future[1] = {0};
    DhViewComparison cmp;
    CHECK(dh_compare_views(space, future, 1, 0, 1e-8, &cmp) == DH_STATUS_OK);
    CHECK(fabs(cmp.minimalist - 0.8) < 1e-12);
    CHECK(fabs(cmp.fatalist - 0.5) < 1e-12);
    CHECK(!cmp.decoherence_passes);

    DhDecoherenceReport report;
    CHECK(dh_decoherence_report(space, 1e-8, &report) == DH_STATUS_OK);
    CHECK(report.n_histories == 16);

    double p = 0.0;
    CHECK(dh_minimalist_future(space, future, 1, 7, &p) == DH_STATUS_OUT_OF_RANGE);
    CHECK(dh_last_error_message() != NULL);
    dh_space_free(space);

    uint64_t count = 0;
    CHECK(dh_branch_count_u64(20, 10, &count) == DH_STATUS_OK);
    CHECK(count == 184756);

    printf("c smoke: %d failures\n", failures);
    return failures == 0 ? 0 : 1;
}

#include <assert.h>
#include <stdio.h>
#include <string.h>
#include "promptfuse.h"

int main(void) {
    float a_vals[2] = {0.0f, 1.0f};
    float b_vals[2] = {1.0f, 0.0f};
    PfMap *a = NULL, *b = NULL, *fused = NULL, *entropy = NULL;
    PfSet *set = NULL;

    assert(pf_map_create(2, 1, a_vals, 2, &a) == PF_STATUS_OK);
    assert(pf_map_create(2, 1, b_vals, 2, &b) == PF_STATUS_OK);
    assert(pf_set_create(&set) == PF_STATUS_OK);
    assert(pf_set_push(set, a) == PF_STATUS_OK);
    assert(pf_set_push(set, b) == PF_STATUS_OK);
    assert(pf_fuse_mean(set, &fused) == PF_STATUS_OK);

    const float *vals = NULL;
    size_t len = 0;
    assert(pf_map_values(fused, &vals, &len) == PF_STATUS_OK);
    assert(len == 2 && vals[0] == 0.5f && vals[1] == 0.5f);

    assert(pf_predictive_entropy(set, &entropy) == PF_STATUS_OK);
    assert(pf_map_values(entropy, &vals, &len) == PF_STATUS_OK);
    assert(vals[0] > 0.999f && vals[0] <= 1.0f);

    PfMap *bad = NULL;
    assert(pf_fuse_mean(NULL, &bad) == PF_STATUS_NULL_ARGUMENT);
    assert(strlen(pf_last_error_message()) > 0);

    PfBox base = { .x0 = 4, .y0 = 4, .x1 = 24, .y1 = 24 };
    PfBox boxes[8];
    assert(pf_jitter_boxes(base, 8, 0.1, 7, 64, 64, boxes, 8, &len) == PF_STATUS_OK);
    assert(len == 8);

    pf_map_free(entropy);
    pf_map_free(fused);
    pf_set_free(set);
    pf_map_free(b);
    pf_map_free(a);
    printf("c smoke ok (version %s)\n", pf_version());
    return 0;
}

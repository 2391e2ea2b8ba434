/* Builds as C to keep the public header C-clean; runs a tiny scenario end to end. */
#include <stdio.h>
#include <string.h>

#include "peeroff/peeroff.h"

int main(void) {
    const char* cfg = "{\"algorithm\": \"nop\", \"horizon_slots\": 100, \"stations\": [{}],"
                      " \"arrivals\": {\"kind\": \"bernoulli\", \"p\": [0.1]}}";
    peeroff_scenario* sc = NULL;
    peeroff_run* run = NULL;
    peeroff_counts c;
    if (peeroff_scenario_parse(cfg, &sc) != PEEROFF_OK) {
        fprintf(stderr, "parse: %s\n", peeroff_last_error());
        return 1;
    }
    if (peeroff_run_simulate(sc, NULL, &run) != PEEROFF_OK || peeroff_run_counts(run, &c) != PEEROFF_OK) {
        fprintf(stderr, "run: %s\n", peeroff_last_error());
        return 1;
    }
    peeroff_run_free(run);
    peeroff_scenario_free(sc);
    if (c.arrived != c.served + c.blocked + c.dropped) return 1;
    printf("%s: %lld arrived\n", peeroff_version(), c.arrived);
    return strlen(peeroff_status_name(PEEROFF_OK)) == 2 ? 0 : 1;
}

#include <stdio.h>
#include "mdnuc.h"

int main(void) {
    MdnucConfig *cfg = NULL;
    MdnucScene *scene = NULL;
    MdnucPlan *plan = NULL;
    MdnucReport report;
    double theta = 0.0;

    if (mdnuc_opening_angle(25.6, 14.6, 160.0, &theta) != MDNUC_STATUS_OK) {
        return 1;
    }
    if (mdnuc_config_from_preset("shaft", &cfg) != MDNUC_STATUS_OK) {
        fprintf(stderr, "%s\n", mdnuc_last_error());
        return 1;
    }
    mdnuc_config_set_resolution(cfg, 0.25);
    if (mdnuc_scene_build(cfg, &scene) != MDNUC_STATUS_OK) {
        return 1;
    }
    if (mdnuc_plan(scene, cfg, MDNUC_PLANNER_MDNUC, &plan) != MDNUC_STATUS_OK) {
        return 1;
    }
    if (mdnuc_survey(scene, cfg, plan, &report) != MDNUC_STATUS_OK) {
        return 1;
    }
    printf("%.2f\n", report.coverage_pct);
    mdnuc_plan_free(plan);
    mdnuc_scene_free(scene);
    mdnuc_config_free(cfg);
    return 0;
}

import pytest

from confab import report
from confab.jobs import bundled_job_path, load_job
from confab.materials import load_material_db


@pytest.fixture(scope="session")
def db():
    return load_material_db()


@pytest.fixture(scope="session")
def patch_dims(db):
    from confab.design import synthesize_patch
    from confab.materials import eval_permittivity

    pla = db.by_kind("dielectric")
    er, tand = eval_permittivity(pla, 3e9)
    sigma = db.by_kind("conductor").conductivity_tensor[0]
    return synthesize_patch(3e9, er, 1.5, tan_delta=tand, sigma_eff=sigma)


@pytest.fixture(scope="session")
def patch_job():
    return load_job(bundled_job_path("patch_conformal.job"))


@pytest.fixture(scope="session")
def uwb_job():
    return load_job(bundled_job_path("uwb_doublecurve.job"))


@pytest.fixture(scope="session")
def patch_run(tmp_path_factory, patch_job):
    out = tmp_path_factory.mktemp("patch_run")
    bundle = report.run_pipeline(patch_job, str(out))
    return patch_job, str(out), bundle


@pytest.fixture(scope="session")
def uwb_run(tmp_path_factory, uwb_job):
    out = tmp_path_factory.mktemp("uwb_run")
    bundle = report.run_pipeline(uwb_job, str(out))
    return uwb_job, str(out), bundle

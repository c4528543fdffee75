# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : constants.py
@Description: 专门存放常量。然后，在其他模块中导入它。 Defaults for simulation, schemes, training and evaluation.
@Version    : v0.1.0
@Dependencies:
    - python3
@Changelog  :
    - v0.0.0: Initial version, application defaults.
    - v0.1.0: Replaced application defaults with first hitting diffusion defaults.
"""
DEFAULT_CONFIG = {
    "version": '0.1.0',
    "appname": 'PyFirstHit',
    # 模拟相关配置
    "simulation": {
        "dt": "const:0.001",
        "sigma": "const:1.0",
        "max_steps": 100000,
        "seed": 0,
        "drift_clamp": 0.5,
        "nonhit_policy": "discard",
        "noise_block": 256,
        "workers": 1,
    },
    # 各命中方案的默认容差
    "hit_eps": {
        "sphere": 0.01,
        "boolean": 0.05,
        "categorical": 0.01,
        "fixedtime": 0.05,
        "halfspace": 0.001,
    },
    # 训练相关配置（按方案区分学习率）
    "training": {
        "epochs": 200,
        "batch_size": 32,
        "snapshots_per_item": 6,
        "beta1": 0.9,
        "beta2": 0.999,
        "adam_eps": 1e-8,
        "hidden": 100,
        "hidden_layers": 2,
        "output_bound": 5.0,
        "bound_all_schemes": False,
        "use_pool": False,
        "pool_factor": 10,
        "learning_rate": {
            "sphere": 0.05,
            "boolean": 0.001,
            "categorical": 0.0001,
            "fixedtime": 0.001,
            "halfspace": 0.001,
        },
    },
    # h 变换采样
    "h_sampler": {
        "particles": 32,
    },
    # 评估相关配置
    "evaluation": {
        "circle_bins": 36,
        "sphere_lat_bands": 16,
        "sphere_lon_bins": 32,
        "time_bins": 40,
    },
    "seed_env": "FHDM_SEED",
    "import": [],
}

# 外部文件格式
MODEL_MAGIC = "FHDM-MLP v1"
FLOAT_FORMAT = ".17g"
SVG_WIDTH = 800
SVG_HEIGHT = 600

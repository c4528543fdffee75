# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : __init__.py
@Description: 漂移网络（MLP + Adam）与快照得分匹配训练。
@Version    : v0.1.0
"""

#  Copyright (c) "ACP-HOI Authors"
#  #
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#  #
#      https://www.apache.org/licenses/LICENSE-2.0
#  #
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
from .functional import (
    EPS,
    LossTerm,
    bce,
    ce_softmax,
    dense,
    dense_backward,
    relu,
    relu_backward,
    sigmoid,
    sigmoid_backward,
    softmax_row,
    softmax_row_backward,
)
from .gradcheck import finite_diff_check
from .layers import MlpCache, add_mlp, mlp_backward, mlp_forward
from .optim import Adam, AdamState, Optimizer, Sgd, adam_step, sgd_step
from .params import ParamStore, load_checkpoint, save_checkpoint

__all__ = [
    "EPS",
    "LossTerm",
    "bce",
    "ce_softmax",
    "dense",
    "dense_backward",
    "relu",
    "relu_backward",
    "sigmoid",
    "sigmoid_backward",
    "softmax_row",
    "softmax_row_backward",
    "finite_diff_check",
    "MlpCache",
    "add_mlp",
    "mlp_forward",
    "mlp_backward",
    "Optimizer",
    "Sgd",
    "Adam",
    "AdamState",
    "sgd_step",
    "adam_step",
    "ParamStore",
    "save_checkpoint",
    "load_checkpoint",
]

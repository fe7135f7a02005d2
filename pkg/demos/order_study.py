"""How many temporal derivatives does a swinging door need?

A spring-loaded door decelerates as it closes, so a constant-position
model lags the angle while first and second order models keep up.
"""
from artslam import experiments as ex

table = ex.run_order_study(ex.spring_door_profile(), (0, 1, 2))
for order, rmse in table.items():
    print(f"order {order}: rmse {rmse:.4f} rad")

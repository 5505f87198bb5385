"""指数数据、逼近剖面与 Khintchine 型实验。"""
